#include "ssav/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace ssav::quad {

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    if (a == b) {
        return 0.0;
    }
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, /*max_depth=*/25, /*tol=*/1e-14, &error);
    if (!std::isfinite(value) || error > std::max(abs_tol, 1e-12 * std::abs(value))) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "adaptive quadrature on [%g, %g] did not reach tolerance (error estimate %g)",
                      a, b, error);
        throw QuadratureError(msg);
    }
    return value;
}

double integrate(const std::function<double(double)>& f, std::vector<double> points,
                 double abs_tol) {
    std::sort(points.begin(), points.end());
    double total = 0.0;
    const double per_piece = abs_tol / std::max<std::size_t>(1, points.size() - 1);
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        total += integrate(f, points[i], points[i + 1], per_piece);
    }
    return total;
}

GaussLegendre::GaussLegendre(int n) {
    if (n < 1) {
        throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
    }
    // legendre_p_zeros returns the nonnegative roots in increasing order.
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    auto weight = [n](double x) {
        const double dp = boost::math::legendre_p_prime<double>(n, x);
        return 2.0 / ((1.0 - x * x) * dp * dp);
    };
    nodes.reserve(n);
    weights.reserve(n);
    for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
        if (*it == 0.0) {
            continue;
        }
        nodes.push_back(-*it);
        weights.push_back(weight(*it));
    }
    for (double z : zeros) {
        nodes.push_back(z);
        weights.push_back(weight(z));
    }
}

double GaussLegendre::apply(const std::function<double(double)>& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        sum += weights[i] * f(mid + half * nodes[i]);
    }
    return half * sum;
}

TabulatedCdf::TabulatedCdf(const std::function<double(double)>& density, double lo, double hi,
                           int cells)
    : lo_(lo), hi_(hi), width_((hi - lo) / cells), values_(cells + 1, 0.0),
      slopes_(cells + 1, 0.0) {
    if (!(hi > lo) || cells < 1) {
        throw std::invalid_argument("TabulatedCdf needs hi > lo and at least one cell");
    }
    static const GaussLegendre rule(8);
    for (int i = 0; i < cells; ++i) {
        const double a = lo + i * width_;
        values_[i + 1] = values_[i] + rule.apply(density, a, a + width_);
        slopes_[i] = density(a);
    }
    slopes_[cells] = density(hi);
    mass_ = values_.back();
    if (!(mass_ > 0.0) || !std::isfinite(mass_)) {
        throw QuadratureError("density has no finite positive mass on the box");
    }
    for (double& v : values_) {
        v /= mass_;
    }
    for (double& d : slopes_) {
        d /= mass_;
    }
}

double TabulatedCdf::operator()(double x) const {
    if (!(x > lo_)) {
        return 0.0;
    }
    if (x >= hi_) {
        return 1.0;
    }
    const double pos = (x - lo_) / width_;
    const auto i = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
    const double frac = pos - static_cast<double>(i);
    // Cubic Hermite between nodes, with the density as the derivative.
    const double t = frac;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    const double f = h00 * values_[i] + h10 * width_ * slopes_[i] + h01 * values_[i + 1] +
                     h11 * width_ * slopes_[i + 1];
    return std::clamp(f, 0.0, 1.0);
}

}  // namespace ssav::quad
