#include "ssav/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssav {

std::vector<quad::TabulatedCdf> coordinate_cdfs(const AnalyticDensity& density, int dim) {
    std::vector<quad::TabulatedCdf> cdfs;
    if (dim == 1) {
        Vector x(1);
        cdfs.emplace_back(
            [&](double t) {
                x[0] = t;
                return density.marginal_u(x);
            },
            density.box_lo, density.box_hi);
    } else if (dim == 2) {
        static const quad::GaussLegendre rule(400);
        for (int axis = 0; axis < 2; ++axis) {
            Vector x(2);
            auto marginal = [&](double t) {
                x[axis] = t;
                return rule.apply(
                    [&](double s) {
                        x[1 - axis] = s;
                        return density.marginal_u(x);
                    },
                    density.box_lo, density.box_hi);
            };
            cdfs.emplace_back(marginal, density.box_lo, density.box_hi, 2000);
        }
    } else {
        throw std::invalid_argument("coordinate marginals are only available for dim <= 2");
    }
    return cdfs;
}

double stationary_expectation(const AnalyticDensity& density,
                              const std::function<double(double, double)>& phi) {
    if (!density.normalizer_u) {
        throw std::invalid_argument("stationary expectation needs a normalized density");
    }
    // Polar coordinates about the origin: test functions of |x| are smooth in
    // (r, θ), and the θ-integrand is periodic, so the trapezoidal rule in θ
    // converges geometrically.
    constexpr double kRadius = 12.0;
    constexpr int kPanels = 96;
    constexpr int kAngles = 512;
    static const quad::GaussLegendre rule(20);
    const double panel = kRadius / kPanels;
    const double dtheta = 2.0 * M_PI / kAngles;
    std::vector<double> cs(kAngles), sn(kAngles);
    for (int k = 0; k < kAngles; ++k) {
        cs[k] = std::cos(k * dtheta);
        sn[k] = std::sin(k * dtheta);
    }
    Vector vv(1), uu(1);
    double total = 0.0;
    for (int p = 0; p < kPanels; ++p) {
        const double mid = (p + 0.5) * panel;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double r = mid + 0.5 * panel * rule.nodes[i];
            double ring = 0.0;
            for (int k = 0; k < kAngles; ++k) {
                const double v = r * cs[k];
                const double u = r * sn[k];
                vv[0] = v;
                uu[0] = u;
                ring += phi(v, u) * density.marginal_v(vv) * density.marginal_u(uu);
            }
            total += 0.5 * panel * rule.weights[i] * r * ring * dtheta;
        }
    }
    return total / *density.normalizer_u;
}

StationarySampler::StationarySampler(const ModelSpec& model)
    : dim_(model.dim), kappa_(model.kappa) {
    if (!model.density) {
        throw std::invalid_argument("stationary sampling needs a reference density");
    }
    if (dim_ > 2) {
        throw std::invalid_argument("stationary sampling is only available for dim <= 2");
    }
    density_ = model.density->marginal_u;
    lo_ = model.density->box_lo;
    hi_ = model.density->box_hi;
    const int n = dim_ == 1 ? 20001 : 701;
    double peak = 0.0;
    Vector x(dim_);
    const double step = (hi_ - lo_) / (n - 1);
    for (int i = 0; i < n; ++i) {
        x[0] = lo_ + i * step;
        if (dim_ == 1) {
            peak = std::max(peak, density_(x));
            continue;
        }
        for (int j = 0; j < n; ++j) {
            x[1] = lo_ + j * step;
            peak = std::max(peak, density_(x));
        }
    }
    envelope_ = 1.05 * peak;
}

Vector StationarySampler::draw_u(PathUniforms& uniforms) const {
    Vector x(dim_);
    for (int attempt = 0; attempt < 10'000'000; ++attempt) {
        for (int i = 0; i < dim_; ++i) {
            x[i] = lo_ + (hi_ - lo_) * uniforms.next();
        }
        if (uniforms.next() * envelope_ <= density_(x)) {
            return x;
        }
    }
    throw std::runtime_error("rejection sampler failed to accept a draw");
}

Vector StationarySampler::draw_v(std::uint64_t seed, std::uint64_t path_index) const {
    return std::sqrt(kappa_) * initial_normals(seed, path_index, dim_, 1);
}

}  // namespace ssav
