#pragma once

#include "ssav/model.hpp"
#include "ssav/noise.hpp"
#include "ssav/quadrature.hpp"

#include <functional>
#include <vector>

namespace ssav {

/// CDF of each u-coordinate under the reference density, on the density's
/// box. For dim = 2 the other coordinate is integrated out with 400-node
/// Gauss–Legendre. Throws std::invalid_argument for dim > 2.
std::vector<quad::TabulatedCdf> coordinate_cdfs(const AnalyticDensity& density, int dim);

/// ∫ φ(v, u) dμ∞ for dim = 1 over the disc |x| ≤ 12, by Gauss–Legendre in
/// the radius and the trapezoidal rule in the angle.
double stationary_expectation(const AnalyticDensity& density,
                              const std::function<double(double v, double u)>& phi);

/// Exact draws from μ∞: v ~ N(0, κI), u by rejection from the density's box
/// under a uniform envelope (dim ≤ 2).
class StationarySampler {
public:
    explicit StationarySampler(const ModelSpec& model);

    Vector draw_u(PathUniforms& uniforms) const;
    Vector draw_v(std::uint64_t seed, std::uint64_t path_index) const;

private:
    int dim_;
    double kappa_;
    std::function<double(const Vector&)> density_;
    double lo_;
    double hi_;
    double envelope_;
};

}  // namespace ssav
