#pragma once

#include "ssav/model.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace ssav {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Two independent standard normals from one Philox block (Box–Muller).
std::array<double, 2> philox_normal_pair(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key);

class AlignmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Constants of the exact OU step over a stepsize h with friction γ.
struct OuCoefficients {
    double h = 0.0;
    double decay = 1.0;      ///< e^{−γh}
    double ou_var = 0.0;     ///< (1 − e^{−2γh}) / (2γ)
    double cross_cov = 0.0;  ///< Cov(ΔW, J) = (1 − e^{−γh}) / γ
    double chol_w = 0.0;     ///< √h
    double chol_cross = 0.0; ///< cross_cov / √h
    double chol_resid = 0.0; ///< √(ou_var − cross_cov²/h)
};

OuCoefficients ou_coefficients(double gamma, double h);

/// Noise domains; each gets its own counter space.
enum class NoiseDomain : std::uint16_t { Increments = 0, InitialLaw = 1 };

/// Seeded hierarchy of fine-interval pairs (ΔW_i, J_i) for one path, where
/// J_i is the raw (pre-Γ) OU integral ∫ e^{−γ(end_i − s)} dW_s over interval i.
///
/// Pairs are regenerated on demand from (seed, path, interval, coordinate), so
/// a plan is a few words regardless of the horizon.
class NoisePlan {
public:
    NoisePlan(std::uint64_t seed, std::uint64_t path_index, double gamma, int dim,
              double fine_step, std::int64_t n_intervals);

    /// Fills ΔW_i and J_i for every coordinate of fine interval `interval`.
    void fine_pair(std::int64_t interval, Vector& dw, Vector& j) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_index() const { return path_; }
    double gamma() const { return gamma_; }
    int dim() const { return dim_; }
    double fine_step() const { return coeffs_.h; }
    std::int64_t intervals() const { return n_intervals_; }
    const OuCoefficients& coefficients() const { return coeffs_; }

    /// Generates every pair once and serves later fine_pair calls from memory
    /// (2·dim doubles per interval). Values are identical either way.
    void materialize();
    bool materialized() const { return !table_.empty(); }

private:
    std::uint64_t seed_;
    std::uint64_t path_;
    double gamma_;
    int dim_;
    std::int64_t n_intervals_;
    OuCoefficients coeffs_;
    std::vector<double> table_;
};

/// Plan with 2^L fine intervals over [0, T].
NoisePlan sample_fine_pairs(std::uint64_t seed, std::uint64_t path_index, double gamma, int dim,
                            int level, double horizon);

/// Raw coarse OU integral over [t_a, t_c]: Σ_i e^{−γ(t_c − end_i)} J_i,
/// summed in increasing time with compensation. Throws AlignmentError when an
/// endpoint is off the fine grid.
Vector compose_ou(const NoisePlan& plan, double t_a, double t_c);

/// Σ ΔW_i over [t_a, t_c].
Vector compose_increment(const NoisePlan& plan, double t_a, double t_c);

/// Noise for one step: ou_integral is already multiplied by Γ; the Wiener
/// increment is raw.
struct StepNoise {
    Vector ou_integral;
    Vector wiener_increment;

    static StepNoise zero(int dim) { return {Vector::Zero(dim), Vector::Zero(dim)}; }
};

/// Sequential producer of per-step noise.
class StepNoiseSource {
public:
    virtual ~StepNoiseSource() = default;
    virtual void next(StepNoise& out) = 0;
};

/// Step noise at `ratio` fine intervals per step, composed from a plan. With
/// ratio 1 this is plain direct sampling at the plan's stepsize.
class CoupledNoise final : public StepNoiseSource {
public:
    CoupledNoise(const ModelSpec& model, const NoisePlan& plan, std::int64_t ratio);

    void next(StepNoise& out) override;
    void reset() { next_interval_ = 0; }

private:
    const ModelSpec& model_;
    const NoisePlan& plan_;
    std::int64_t ratio_;
    std::int64_t next_interval_ = 0;
    std::vector<double> weights_;
    Vector dw_;
    Vector j_;
    Vector sum_ou_;
    Vector comp_ou_;
    Vector sum_dw_;
    Vector comp_dw_;
};

/// Always-zero noise (deterministic dynamics).
class ZeroNoise final : public StepNoiseSource {
public:
    void next(StepNoise& out) override {
        out.ou_integral.setZero();
        out.wiener_increment.setZero();
    }
};

/// Standard normal vector from the InitialLaw domain of (seed, path).
Vector initial_normals(std::uint64_t seed, std::uint64_t path_index, int count,
                       std::uint32_t stream = 0);

/// Uniforms in (0, 1) from the InitialLaw domain (for rejection sampling).
class PathUniforms {
public:
    PathUniforms(std::uint64_t seed, std::uint64_t path_index, std::uint32_t stream);
    double next();

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t path_;
    std::uint32_t stream_;
    std::uint64_t counter_ = 0;
    std::array<double, 2> buffer_{};
    int available_ = 0;
};

}  // namespace ssav
