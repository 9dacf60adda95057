#pragma once

#include "ssav/noise.hpp"
#include "ssav/sav_core.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace ssav {

/// Preallocated buffers for the allocation-free stepping kernels.
struct StepWorkspace {
    Vector grad;
    Vector q;
    Vector v_new;

    explicit StepWorkspace(int dim = 1) : grad(dim), q(dim), v_new(dim) {}
};

/// Deterministic SAV substep, solved in closed form: ρ first, then v via I^h,
/// then u by the trapezoidal position update. Operates in place.
void ssav_deterministic_substep_inplace(const ModelSpec& model, AugmentedState& state, double h,
                                        StepWorkspace& ws);

AugmentedState ssav_deterministic_substep(const ModelSpec& model, const AugmentedState& state,
                                          double h);

class NoConvergence : public std::runtime_error {
public:
    explicit NoConvergence(int max_iter);
    int max_iter() const { return max_iter_; }

private:
    int max_iter_;
};

struct PicardResult {
    AugmentedState state;
    int iterations = 0;
};

/// Solves the implicit midpoint-type system of the deterministic substep by
/// plain fixed-point iteration on (v, u, ρ), stopping when successive iterates
/// differ by less than `tol` in max norm. Independent of the closed form.
PicardResult ssav_implicit_oracle(const ModelSpec& model, const AugmentedState& state, double h,
                                  double tol = 1e-13, int max_iter = 200);

/// e^{−γh}·v + ou_integral.
Vector ou_substep(const ModelSpec& model, const Vector& v_tri, double h, const StepNoise& noise);

/// One full step: deterministic substep, then the exact OU substep on v.
void ssav_step_inplace(const ModelSpec& model, AugmentedState& state, const OuCoefficients& ou,
                       const StepNoise& noise, StepWorkspace& ws);

AugmentedState ssav_step(const ModelSpec& model, const AugmentedState& state, double h,
                         const StepNoise& noise);

/// Euler–Maruyama: v' = v + (−κ∇Φ(u) − γv)h + Γ·dW, u' = u + v·h.
void em_step_inplace(const ModelSpec& model, Vector& v, Vector& u, double h, const Vector& dw,
                     StepWorkspace& ws);

std::pair<Vector, Vector> em_step(const ModelSpec& model, const Vector& v, const Vector& u,
                                  double h, const Vector& dw);

enum class Method { Ssav, EulerMaruyama };

const char* method_name(Method method);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<AugmentedState> states;
    /// Modified energy 𝓗 for SSAV, H(v, u) for Euler–Maruyama.
    std::vector<double> energies;
    /// First step whose output was NaN/Inf (Euler–Maruyama only), if any.
    std::optional<long> first_failure;
};

/// Iterates the chosen method for `n_steps`, recording the initial state and
/// every `record_every`-th step. For Euler–Maruyama ρ is carried unchanged and
/// has no meaning; a non-finite state is recorded once and ends the run.
/// AssumptionViolation is rethrown carrying the failing step index.
TrajectoryRecord run_trajectory(const ModelSpec& model, const AugmentedState& init, double h,
                                long n_steps, StepNoiseSource& noise, long record_every = 1,
                                Method method = Method::Ssav, bool record_energy = true);

}  // namespace ssav
