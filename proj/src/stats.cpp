#include "ssav/stats.hpp"

#include <algorithm>
#include <iostream>

namespace ssav::stats {

SlopeFit loglog_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("slope fit needs equally long inputs");
    }
    std::vector<double> lx, ly;
    SlopeFit fit;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0.0) || !std::isfinite(y[i]) || !(x[i] > 0.0)) {
            ++fit.excluded;
            continue;
        }
        lx.push_back(std::log2(x[i]));
        ly.push_back(std::log2(y[i]));
    }
    if (fit.excluded > 0) {
        std::clog << "warning: slope fit dropped " << fit.excluded << " non-positive row(s)\n";
    }
    const std::size_t n = lx.size();
    if (n < 3) {
        throw FitError("slope fit needs at least 3 rows with positive error, got " +
                       std::to_string(n));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw FitError("slope fit needs at least two distinct stepsizes");
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - fit.intercept - fit.slope * lx[i];
        rss += r * r;
    }
    fit.std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    fit.used = n;
    return fit;
}

SlopeFit slope_fit(std::span<const double> h, std::span<const double> error) {
    return loglog_fit(h, error);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) {
        throw std::invalid_argument("ks_statistic needs at least one sample");
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

Histogram::Histogram(double lo_, double hi_, int bins) : lo(lo_), hi(hi_), counts(bins, 0) {
    if (bins < 1 || !(hi_ > lo_)) {
        throw std::invalid_argument("histogram needs hi > lo and at least one bin");
    }
}

void Histogram::add(double x) {
    if (x < lo) {
        ++below;
    } else if (x >= hi) {
        ++above;
    } else {
        const auto i = std::min(counts.size() - 1, static_cast<std::size_t>((x - lo) / width()));
        ++counts[i];
    }
}

double Histogram::bin_left(std::size_t i) const { return lo + static_cast<double>(i) * width(); }
double Histogram::bin_right(std::size_t i) const {
    return lo + static_cast<double>(i + 1) * width();
}

}  // namespace ssav::stats
