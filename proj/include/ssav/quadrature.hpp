#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace ssav::quad {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive Gauss–Kronrod (61-point) on [a, b]. Throws QuadratureError when
/// the error estimate exceeds both `abs_tol` and 1e-12·|value|.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

/// Same, with the interval split at the given interior breakpoints.
double integrate(const std::function<double(double)>& f, std::vector<double> points,
                 double abs_tol = 1e-10);

/// Gauss–Legendre rule on [−1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n);

    /// ∫_a^b f with the rule mapped affinely onto [a, b].
    double apply(const std::function<double(double)>& f, double a, double b) const;
};

/// A CDF tabulated on a uniform grid over [lo, hi] by cumulative
/// Gauss–Legendre integration of a density, normalized to total mass 1 on the
/// box and interpolated by cubic Hermite in between.
class TabulatedCdf {
public:
    TabulatedCdf(const std::function<double(double)>& density, double lo, double hi,
                 int cells = 4000);

    double operator()(double x) const;
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    /// Unnormalized ∫_lo^hi density.
    double mass() const { return mass_; }

private:
    double lo_;
    double hi_;
    double width_;
    double mass_ = 0.0;
    std::vector<double> values_;
    /// Normalized density at the nodes.
    std::vector<double> slopes_;
};

}  // namespace ssav::quad
