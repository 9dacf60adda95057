#include "ssav/noise.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ssav {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

/// Uniform in (0, 1) from 64 random bits, 53-bit resolution, never 0 or 1.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::array<std::uint32_t, 2> split_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

std::array<std::uint32_t, 4> make_counter(NoiseDomain domain, std::uint64_t index,
                                          std::uint32_t lane, std::uint64_t path) {
    return {static_cast<std::uint32_t>(index),
            static_cast<std::uint32_t>((index >> 32) & 0xFFFFu) |
                (static_cast<std::uint32_t>(domain) << 16),
            (lane & 0xFFFFu) | static_cast<std::uint32_t>((path >> 32) << 16),
            static_cast<std::uint32_t>(path)};
}

/// (1 − e^{−2x})/2 − (1 − e^{−x})²/x, i.e. γ times the residual variance of J
/// given ΔW, with x = γh. Series near 0 where the direct form cancels.
double residual_scaled(double x) {
    if (x < 0.05) {
        const double x3 = x * x * x;
        return x3 * (1.0 / 12 +
                     x * (-1.0 / 12 +
                          x * (17.0 / 360 +
                               x * (-7.0 / 360 + x * (43.0 / 6720 +
                                                      x * (-107.0 / 60480 +
                                                           x * (769.0 / 1814400)))))));
    }
    const double e1 = -std::expm1(-x);
    return -0.5 * std::expm1(-2.0 * x) - e1 * e1 / x;
}

struct Neumaier {
    static void add(double& sum, double& comp, double term) {
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
};

std::int64_t grid_index(double t, double step, const char* which) {
    const double pos = t / step;
    const double idx = std::nearbyint(pos);
    if (std::abs(pos - idx) > 1e-9 * std::max(1.0, std::abs(idx))) {
        throw AlignmentError(std::string(which) + " time " + std::to_string(t) +
                             " is not on the fine grid of step " + std::to_string(step));
    }
    return static_cast<std::int64_t>(idx);
}

std::pair<std::int64_t, std::int64_t> aligned_range(const NoisePlan& plan, double t_a,
                                                    double t_c) {
    const auto a = grid_index(t_a, plan.fine_step(), "start");
    const auto c = grid_index(t_c, plan.fine_step(), "end");
    if (a < 0 || c > plan.intervals() || c <= a) {
        throw AlignmentError("interval [" + std::to_string(t_a) + ", " + std::to_string(t_c) +
                             "] is empty or outside the plan horizon");
    }
    return {a, c};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::array<double, 2> philox_normal_pair(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key) {
    const auto x = philox4x32(counter, key);
    const double u1 = to_unit(x[0], x[1]);
    const double u2 = to_unit(x[2], x[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

OuCoefficients ou_coefficients(double gamma, double h) {
    if (!(gamma > 0.0) || !(h > 0.0)) {
        throw std::invalid_argument("ou_coefficients needs gamma > 0 and h > 0");
    }
    const double x = gamma * h;
    OuCoefficients c;
    c.h = h;
    c.decay = std::exp(-x);
    c.ou_var = -std::expm1(-2.0 * x) / (2.0 * gamma);
    c.cross_cov = -std::expm1(-x) / gamma;
    c.chol_w = std::sqrt(h);
    c.chol_cross = c.cross_cov / c.chol_w;
    c.chol_resid = std::sqrt(std::max(0.0, residual_scaled(x) / gamma));
    return c;
}

NoisePlan::NoisePlan(std::uint64_t seed, std::uint64_t path_index, double gamma, int dim,
                     double fine_step, std::int64_t n_intervals)
    : seed_(seed),
      path_(path_index),
      gamma_(gamma),
      dim_(dim),
      n_intervals_(n_intervals),
      coeffs_(ou_coefficients(gamma, fine_step)) {
    if (dim < 1 || n_intervals < 1) {
        throw std::invalid_argument("NoisePlan needs dim >= 1 and at least one interval");
    }
}

void NoisePlan::fine_pair(std::int64_t interval, Vector& dw, Vector& j) const {
    dw.resize(dim_);
    j.resize(dim_);
    if (!table_.empty()) {
        const double* row = table_.data() + static_cast<std::size_t>(interval) * 2 * dim_;
        for (int i = 0; i < dim_; ++i) {
            dw[i] = row[2 * i];
            j[i] = row[2 * i + 1];
        }
        return;
    }
    const auto key = split_seed(seed_);
    for (int i = 0; i < dim_; ++i) {
        const auto z = philox_normal_pair(
            make_counter(NoiseDomain::Increments, static_cast<std::uint64_t>(interval),
                         static_cast<std::uint32_t>(i), path_),
            key);
        dw[i] = coeffs_.chol_w * z[0];
        j[i] = coeffs_.chol_cross * z[0] + coeffs_.chol_resid * z[1];
    }
}

void NoisePlan::materialize() {
    if (!table_.empty()) {
        return;
    }
    std::vector<double> table(static_cast<std::size_t>(n_intervals_) * 2 * dim_);
    Vector dw(dim_);
    Vector j(dim_);
    for (std::int64_t n = 0; n < n_intervals_; ++n) {
        fine_pair(n, dw, j);
        double* row = table.data() + static_cast<std::size_t>(n) * 2 * dim_;
        for (int i = 0; i < dim_; ++i) {
            row[2 * i] = dw[i];
            row[2 * i + 1] = j[i];
        }
    }
    table_ = std::move(table);
}

NoisePlan sample_fine_pairs(std::uint64_t seed, std::uint64_t path_index, double gamma, int dim,
                            int level, double horizon) {
    if (level < 0 || level > 40) {
        throw std::invalid_argument("fine level must lie in [0, 40]");
    }
    const std::int64_t n = std::int64_t{1} << level;
    return NoisePlan(seed, path_index, gamma, dim, horizon / static_cast<double>(n), n);
}

Vector compose_ou(const NoisePlan& plan, double t_a, double t_c) {
    const auto [a, c] = aligned_range(plan, t_a, t_c);
    const double g_delta = plan.gamma() * plan.fine_step();
    Vector sum = Vector::Zero(plan.dim());
    Vector comp = Vector::Zero(plan.dim());
    Vector dw, j;
    for (std::int64_t i = a; i < c; ++i) {
        plan.fine_pair(i, dw, j);
        const double w = std::exp(-g_delta * static_cast<double>(c - 1 - i));
        for (int k = 0; k < plan.dim(); ++k) {
            Neumaier::add(sum[k], comp[k], w * j[k]);
        }
    }
    return sum + comp;
}

Vector compose_increment(const NoisePlan& plan, double t_a, double t_c) {
    const auto [a, c] = aligned_range(plan, t_a, t_c);
    Vector sum = Vector::Zero(plan.dim());
    Vector comp = Vector::Zero(plan.dim());
    Vector dw, j;
    for (std::int64_t i = a; i < c; ++i) {
        plan.fine_pair(i, dw, j);
        for (int k = 0; k < plan.dim(); ++k) {
            Neumaier::add(sum[k], comp[k], dw[k]);
        }
    }
    return sum + comp;
}

CoupledNoise::CoupledNoise(const ModelSpec& model, const NoisePlan& plan, std::int64_t ratio)
    : model_(model), plan_(plan), ratio_(ratio) {
    if (ratio < 1) {
        throw std::invalid_argument("coupling ratio must be >= 1");
    }
    if (plan.dim() != model.dim) {
        throw std::invalid_argument("noise plan dimension does not match the model");
    }
    const double g_delta = plan.gamma() * plan.fine_step();
    weights_.resize(static_cast<std::size_t>(ratio));
    for (std::int64_t k = 0; k < ratio; ++k) {
        weights_[static_cast<std::size_t>(k)] = std::exp(-g_delta * static_cast<double>(ratio - 1 - k));
    }
    const int m = model.dim;
    dw_.resize(m);
    j_.resize(m);
    sum_ou_.resize(m);
    comp_ou_.resize(m);
    sum_dw_.resize(m);
    comp_dw_.resize(m);
}

void CoupledNoise::next(StepNoise& out) {
    if (next_interval_ + ratio_ > plan_.intervals()) {
        throw std::out_of_range("coupled noise ran past the end of its plan");
    }
    out.ou_integral.resize(model_.dim);
    out.wiener_increment.resize(model_.dim);
    if (ratio_ == 1) {
        plan_.fine_pair(next_interval_++, out.wiener_increment, j_);
        model_.apply_noise(j_, out.ou_integral);
        return;
    }
    sum_ou_.setZero();
    comp_ou_.setZero();
    sum_dw_.setZero();
    comp_dw_.setZero();
    for (std::int64_t k = 0; k < ratio_; ++k) {
        plan_.fine_pair(next_interval_ + k, dw_, j_);
        const double w = weights_[static_cast<std::size_t>(k)];
        for (int i = 0; i < model_.dim; ++i) {
            Neumaier::add(sum_ou_[i], comp_ou_[i], w * j_[i]);
            Neumaier::add(sum_dw_[i], comp_dw_[i], dw_[i]);
        }
    }
    next_interval_ += ratio_;
    out.wiener_increment = sum_dw_ + comp_dw_;
    j_ = sum_ou_ + comp_ou_;
    model_.apply_noise(j_, out.ou_integral);
}

Vector initial_normals(std::uint64_t seed, std::uint64_t path_index, int count,
                       std::uint32_t stream) {
    Vector z(count);
    const auto key = split_seed(seed);
    for (int i = 0; i < count; i += 2) {
        const auto pair = philox_normal_pair(
            make_counter(NoiseDomain::InitialLaw, static_cast<std::uint64_t>(i / 2), stream,
                         path_index),
            key);
        z[i] = pair[0];
        if (i + 1 < count) {
            z[i + 1] = pair[1];
        }
    }
    return z;
}

PathUniforms::PathUniforms(std::uint64_t seed, std::uint64_t path_index, std::uint32_t stream)
    : key_(split_seed(seed)), path_(path_index), stream_(stream) {}

double PathUniforms::next() {
    if (available_ == 0) {
        const auto x = philox4x32(
            make_counter(NoiseDomain::InitialLaw, counter_++, stream_ | 0x8000u, path_), key_);
        buffer_ = {to_unit(x[0], x[1]), to_unit(x[2], x[3])};
        available_ = 2;
    }
    return buffer_[static_cast<std::size_t>(--available_)];
}

}  // namespace ssav
