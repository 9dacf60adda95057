#pragma once

#include "ssav/model.hpp"

namespace ssav {

/// Per-step quantities Q_n and I_n^h.
struct StepScratch {
    Vector q;
    double i_factor = 0.0;
    double h = 0.0;
};

/// Below this radicand a one-time warning is printed; below 1 the step fails.
inline constexpr double kRadicandWarnLevel = 10.0;

/// κΦ(u) + C_H − α|u|², unchecked.
double sav_radicand(const ModelSpec& model, const Vector& u);

/// √(κΦ(u) + C_H − α|u|²). Throws AssumptionViolation when the radicand is below 1.
double rho_init(const ModelSpec& model, const Vector& u);

/// Q(u) = (κ∇Φ(u) − 2αu) / (2√(κΦ(u) + C_H − α|u|²)).
Vector q_vector(const ModelSpec& model, const Vector& u);

/// Allocation-free form of q_vector; `grad` is scratch for ∇Φ(u).
void q_vector_into(const ModelSpec& model, const Vector& u, Vector& grad, Vector& q);

/// I^h = (ρ(2+αh²) + ⟨q, v − αuh⟩h) / (2 + αh² + |q|²h²).
double i_factor(const ModelSpec& model, const AugmentedState& state, const Vector& q, double h);

/// Initial augmented state (v, u, rho_init(u)).
AugmentedState make_initial_state(const ModelSpec& model, Vector v, Vector u);

/// Number of radicand evaluations that fell below kRadicandWarnLevel so far.
long low_radicand_events();

}  // namespace ssav
