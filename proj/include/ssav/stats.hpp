#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssav::stats {

/// Welford accumulator; feed values in a fixed order for reproducible output.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stderr_of_mean() const {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

/// Ordinary least squares of log₂(error) on log₂(h). Rows with a non-positive
/// or non-finite error are dropped (counted in `excluded`); fewer than three
/// usable rows raise FitError.
SlopeFit slope_fit(std::span<const double> h, std::span<const double> error);

/// Same fit on arbitrary positive (x, y) pairs, in log-log coordinates.
SlopeFit loglog_fit(std::span<const double> x, std::span<const double> y);

/// Exact one-sample Kolmogorov–Smirnov statistic sup |F_n − F|. Non-finite
/// samples must be removed by the caller.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic 99% critical value 1.63/√n.
inline double ks_critical_99(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<long> counts;
    long below = 0;
    long above = 0;

    Histogram(double lo, double hi, int bins);
    void add(double x);
    double bin_left(std::size_t i) const;
    double bin_right(std::size_t i) const;
    double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

}  // namespace ssav::stats
