#include "ssav/sav_core.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

namespace ssav {

namespace {

std::atomic<long> g_low_radicand{0};

double checked_sqrt_radicand(const ModelSpec& model, const Vector& u) {
    const double r = sav_radicand(model, u);
    if (!(r >= 1.0)) {
        throw AssumptionViolation(u, r);
    }
    if (r < kRadicandWarnLevel) {
        if (g_low_radicand.fetch_add(1, std::memory_order_relaxed) == 0) {
            std::clog << "warning: SAV radicand " << r << " below " << kRadicandWarnLevel
                      << " at u = " << format_vector(u) << "; C_H may be too small\n";
        }
    }
    return std::sqrt(r);
}

}  // namespace

double sav_radicand(const ModelSpec& model, const Vector& u) {
    return model.kappa * model.potential_value(u) + model.c_h - model.alpha * u.squaredNorm();
}

double rho_init(const ModelSpec& model, const Vector& u) {
    return checked_sqrt_radicand(model, u);
}

void q_vector_into(const ModelSpec& model, const Vector& u, Vector& grad, Vector& q) {
    const double root = checked_sqrt_radicand(model, u);
    model.potential->gradient_into(u, grad);
    q = (model.kappa * grad - 2.0 * model.alpha * u) / (2.0 * root);
}

Vector q_vector(const ModelSpec& model, const Vector& u) {
    Vector grad(u.size());
    Vector q(u.size());
    q_vector_into(model, u, grad, q);
    return q;
}

double i_factor(const ModelSpec& model, const AugmentedState& state, const Vector& q, double h) {
    const double a = 2.0 + model.alpha * h * h;
    const double proj = q.dot(state.v) - model.alpha * h * q.dot(state.u);
    return (state.rho * a + proj * h) / (a + q.squaredNorm() * h * h);
}

AugmentedState make_initial_state(const ModelSpec& model, Vector v, Vector u) {
    AugmentedState s;
    s.rho = rho_init(model, u);
    s.v = std::move(v);
    s.u = std::move(u);
    return s;
}

long low_radicand_events() { return g_low_radicand.load(std::memory_order_relaxed); }

}  // namespace ssav
