#pragma once

#include "ssav/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssav {

/// A potential Φ supplied as a value/gradient pair. The gradient writes into a
/// caller-owned buffer so the stepping kernels stay allocation-free.
struct Potential {
    std::string label;
    std::function<double(const Vector&)> value;
    std::function<void(const Vector&, Vector&)> gradient_into;

    double operator()(const Vector& u) const { return value(u); }
    Vector gradient(const Vector& u) const;
};

/// Invariant density μ∞(v, u) = μ_v(v)·μ_u(u) for Γ = √(2κγ)·I.
///
/// `marginal_u` may be unnormalized; `normalizer_u` then holds ∫ marginal_u.
/// It is empty when no normalizer was computed (dimension above 2).
/// [box_lo, box_hi] is the per-axis box used for quadrature and histograms.
struct AnalyticDensity {
    std::function<double(const Vector&)> marginal_v;
    std::function<double(const Vector&)> marginal_u;
    std::optional<double> normalizer_u;
    double box_lo = -10.0;
    double box_hi = 10.0;

    /// Normalized u-density. Throws std::logic_error without a normalizer.
    double density_u(const Vector& u) const;
};

struct PotentialWithDensity {
    Potential potential;
    AnalyticDensity density;
};

struct ModelSpec {
    int dim = 1;
    double kappa = 1.0;
    double gamma = 1.0;
    Matrix noise_matrix;
    double alpha = 1.0;
    double c_h = 1000.0;
    std::shared_ptr<const Potential> potential;
    /// Reference invariant density, when one is known for this potential.
    std::shared_ptr<const AnalyticDensity> density;

    /// Throws ConfigError when any field is out of range.
    void validate() const;

    /// ‖Γ‖² in the trace (Frobenius) norm.
    double noise_norm_sq() const { return noise_matrix.squaredNorm(); }

    /// Γ·raw, written into `out`.
    void apply_noise(const Vector& raw, Vector& out) const;

    /// True when Γ = √(2κγ)·I, the only case in which `density` is the
    /// invariant measure of the dynamics.
    bool density_applies() const;

    double potential_value(const Vector& u) const { return potential->value(u); }
};

/// Builds a validated model. `noise_scale` c means Γ = c·I.
ModelSpec make_model(int dim, double kappa, double gamma, double noise_scale, double alpha,
                     double c_h, PotentialWithDensity pd);
ModelSpec make_model(int dim, double kappa, double gamma, Matrix noise_matrix, double alpha,
                     double c_h, std::shared_ptr<const Potential> potential,
                     std::shared_ptr<const AnalyticDensity> density = nullptr);

// Builtin benchmark potentials.

/// Φ(u) = (u−ι)²/(2σ²) − log(1/3 + (2/3)e^{−2uι/σ²}), m = 1.
PotentialWithDensity builtin_gaussian_mixture(double iota, double sigma, double kappa);

/// Φ(u) = |u|⁴/4 − |u|²/2. The normalizer is computed for dim ≤ 2 only.
PotentialWithDensity builtin_double_well(int dim, double kappa = 1.0);

/// Φ(u₁,u₂) = (u₁²u₂² + u₁² + u₂² − 8(u₁+u₂))/2.
Potential builtin_bimodal();
/// exp(−Φ) for the bimodal potential, normalized by tensor Gauss–Legendre quadrature.
AnalyticDensity bimodal_density(double kappa);

/// Φ(u) = ⟨c, u⟩.
Potential linear_potential(Vector c);

// Diagnostics.

struct GradCheckResult {
    double max_relative_error = 0.0;
    bool finite = true;
    /// The probe where the worst error (or a non-finite value) was found.
    Vector worst_point;
};

/// max over points and coordinates of |central difference − ∇Φ| / (1 + |∇Φ|).
/// Requires eps ∈ (0, 1e-3].
GradCheckResult grad_check(const Potential& potential, std::span<const Vector> points, double eps);

struct FloorCheckResult {
    bool ok = false;
    double min_value = 0.0;
    Vector argmin;
};

/// Evaluates κΦ(x) + C_H − α|x|² at every probe; ok iff the minimum is ≥ 1.
FloorCheckResult sav_floor_check(const ModelSpec& model, std::span<const Vector> probe_points);

/// 201-point lattice per axis on [−10, 10] for dim ≤ 2, otherwise 10⁴ uniform
/// random points in [−10, 10]^dim drawn from `seed`.
std::vector<Vector> default_floor_probes(int dim, std::uint64_t seed = 0);

/// H(v, u) = |v|²/2 + κΦ(u) + C_H.
double hamiltonian(const ModelSpec& model, const Vector& v, const Vector& u);

/// 𝓗(v, u, ρ) = |v|²/2 + α|u|² + ρ².
double modified_energy(const ModelSpec& model, const AugmentedState& state);

}  // namespace ssav
