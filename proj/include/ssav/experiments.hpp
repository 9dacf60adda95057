#pragma once

#include "ssav/integrators.hpp"
#include "ssav/reference.hpp"
#include "ssav/stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ssav {

/// Law of the initial (v₀, u₀); ρ₀ is always rho_init(u₀).
struct InitLaw {
    enum class Kind { Point, Gaussian, Stationary };

    Kind kind = Kind::Point;
    Vector v0;
    Vector u0;
    /// Standard deviation around (v0, u0) for Kind::Gaussian.
    double spread = 0.0;

    /// v₀ = u₀ = (1, …, 1)/√m, so |v₀| = |u₀| = 1.
    static InitLaw unit_point(int dim);
    static InitLaw stationary() { return {Kind::Stationary, {}, {}, 0.0}; }
};

/// Initial state of path `path_index`. `sampler` is required for Kind::Stationary.
AugmentedState draw_initial(const ModelSpec& model, const InitLaw& law, std::uint64_t seed,
                            std::uint64_t path_index, const StationarySampler* sampler = nullptr);

/// A test function φ on x = (v, u) ∈ ℝ^{2m}.
struct TestFunction {
    std::string name;
    std::function<double(const Vector& v, const Vector& u)> map;

    double operator()(const Vector& v, const Vector& u) const { return map(v, u); }
};

namespace test_functions {
/// a·sin(1 + |x|)
TestFunction sine(double amplitude);
/// c·|x|^p
TestFunction power(double coefficient, double p);
/// e^{|x|}
TestFunction exponential();
TestFunction constant(double c);
}  // namespace test_functions

/// 20 sin(1+|x|), |x|³, e^{|x|}.
std::vector<TestFunction> finite_time_test_functions();
/// 2 sin(1+|x|), 2|x|².
std::vector<TestFunction> longtime_test_functions();

// ---------------------------------------------------------------------------
// Convergence studies under coupled noise

struct StudyConfig {
    ModelSpec model;
    double horizon = 1.0;
    std::vector<int> k_range{6, 7, 8, 9, 10, 11};
    int k_ref = 14;
    long n_paths = 1000;
    std::uint64_t seed = 0;
    InitLaw init;
    std::vector<TestFunction> test_functions;
    int threads = 0;

    /// Throws std::invalid_argument unless k_ref > max(k_range) and n_paths ≥ 2.
    void validate() const;
};

struct ConvergenceRow {
    int k = 0;
    double h = 0.0;
    double error = 0.0;
    double std_error = 0.0;
};

struct StudyResult {
    std::string name;
    /// Sorted by decreasing h.
    std::vector<ConvergenceRow> rows;
    std::optional<stats::SlopeFit> fit;
    /// Why `fit` is empty, when it is.
    std::string fit_note;
    std::uint64_t seed = 0;
    long n_paths = 0;
    long excluded_paths = 0;
    double seconds = 0.0;

    std::vector<double> step_sizes() const;
    std::vector<double> errors() const;
};

/// Endpoint states at time T of every path, at every coarse level and at the
/// reference level, all driven by one fine noise plan per path.
struct CoupledEndpoints {
    /// k_range followed by k_ref.
    std::vector<int> levels;
    long n_paths = 0;
    std::vector<AugmentedState> states;
    double seconds = 0.0;

    const AugmentedState& at(long path, std::size_t level) const {
        return states[static_cast<std::size_t>(path) * levels.size() + level];
    }
    std::size_t reference_level() const { return levels.size() - 1; }
};

CoupledEndpoints run_coupled_endpoints(const StudyConfig& cfg);

/// RMS over paths of |X_ref(T) − Y_h(T)| with X = (v, u).
StudyResult strong_error_study(const StudyConfig& cfg);
StudyResult strong_error_from(const StudyConfig& cfg, const CoupledEndpoints& ends);

/// RMS over paths of |𝓗(reference) − 𝓗(coarse)| at T.
StudyResult energy_error_study(const StudyConfig& cfg);
StudyResult energy_error_from(const StudyConfig& cfg, const CoupledEndpoints& ends);

/// |mean φ(Y_h(T)) − mean φ(X_ref(T))| per test function. Paths where φ is not
/// finite at either level are excluded and counted.
std::vector<StudyResult> weak_error_study(const StudyConfig& cfg);
std::vector<StudyResult> weak_error_from(const StudyConfig& cfg, const CoupledEndpoints& ends);

// ---------------------------------------------------------------------------
// Energy identity

using StateSampler = std::function<AugmentedState(std::mt19937_64&)>;

/// v, u uniform in [−box, box]^m; ρ = rho_init(u) + U(−1, 1).
StateSampler uniform_state_sampler(const ModelSpec& model, double box = 3.0);

struct EnergyIdentityReport {
    double max_violation = 0.0;
    long cases = 0;
    AugmentedState worst_state;
    double worst_h = 0.0;
};

/// max over sampled states and h of |𝓗(after) − 𝓗(before)| / (1 + 𝓗(before))
/// across the deterministic substep. Negative h is allowed here.
EnergyIdentityReport energy_identity_suite(const ModelSpec& model, long n_cases,
                                           const StateSampler& sampler,
                                           std::span<const double> h_set, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Ensemble studies (independent paths, direct noise at the working stepsize)

struct EnsembleSpec {
    ModelSpec model;
    double h = 0.0;
    double horizon = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
    InitLaw init;
    long record_every = 1;
    Method method = Method::Ssav;
    int threads = 0;

    /// horizon / h; throws unless it is an integer ≥ 1.
    long n_steps() const;
};

struct EvolutionRow {
    double t = 0.0;
    double value = 0.0;
    double bound = 0.0;
    double std_error = 0.0;
    bool flagged = false;
};

struct EvolutionStudy {
    std::vector<EvolutionRow> rows;
    bool any_flag = false;
    double initial_energy = 0.0;
    double seconds = 0.0;
};

/// Mean modified energy against E[𝓗₀] + ‖Γ‖²t/2; a row is flagged when the
/// mean exceeds the bound by more than 4 standard errors.
EvolutionStudy energy_evolution_study(const EnsembleSpec& spec);

struct MomentStudy {
    int p = 1;
    /// value = E[𝓗^p]; bound = E[𝓗₀] + ‖Γ‖²t/2 for p = 1, NaN otherwise.
    std::vector<EvolutionRow> rows;
    /// Log-log slope of E[𝓗^p] − E[𝓗₀^p] against t over t ∈ [T/2, T].
    std::optional<stats::SlopeFit> growth;
    std::string growth_note;
    /// p = 1 only: E[𝓗] − E[𝓗₀] ≤ ‖Γ‖²t/2 + 4·SE at every recorded t.
    bool linear_bound_ok = true;
};

std::vector<MomentStudy> moment_growth_study(const EnsembleSpec& spec, std::span<const int> p_list);

struct ExpIntegrabilityProbe {
    double delta = 0.0;
    double lambda = 0.0;
    /// value = mean exp(e^{−λt}δ𝓗), bound = the right-hand side evaluated from 𝓗₀.
    std::vector<EvolutionRow> rows;
    long overflow_paths = 0;
    bool below_bound = true;
};

/// Requires λ ≥ max(δ‖Γ‖² − 2γ, 0).
ExpIntegrabilityProbe exp_integrability_probe(const EnsembleSpec& spec, double delta,
                                              double lambda);

/// e^{−λt}·δ·(𝓗₀ + ‖Γ‖²t/2): the exponent envelope of the probe statistic.
double expint_envelope_exponent(double initial_energy, double noise_norm_sq, double delta,
                                double lambda, double t);

struct LongtimeCurve {
    std::string name;
    double reference = 0.0;
    /// value = |mean φ(Y_t) − ∫φ dμ∞|, bound = 0.02 + 3·SE.
    std::vector<EvolutionRow> rows;
};

/// Requires dim = 1 and a normalized reference density.
std::vector<LongtimeCurve> longtime_weak_study(const EnsembleSpec& spec,
                                               std::span<const TestFunction> functions);

struct DensityResult {
    std::vector<AugmentedState> endpoints;
    /// Non-finite endpoint (or, for SSAV, an assumption violation).
    std::vector<bool> diverged;
    long nan_count = 0;
    long assumption_violations = 0;
    std::vector<stats::Histogram> histograms;
    /// Reference mass per bin divided by bin width, per coordinate.
    std::vector<std::vector<double>> reference_bin_density;
    /// KS statistic per u-coordinate over the finite endpoints (empty when no
    /// reference density or fewer than 2 finite samples).
    std::vector<double> ks;
    double seconds = 0.0;
};

DensityResult density_study(const EnsembleSpec& spec, int bins = 100);

}  // namespace ssav
