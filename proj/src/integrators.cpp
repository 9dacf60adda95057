#include "ssav/integrators.hpp"

#include <cmath>
#include <string>

namespace ssav {

void ssav_deterministic_substep_inplace(const ModelSpec& model, AugmentedState& s, double h,
                                        StepWorkspace& ws) {
    q_vector_into(model, s.u, ws.grad, ws.q);
    const double alpha = model.alpha;
    const double a = 2.0 + alpha * h * h;
    const double qq = ws.q.squaredNorm();
    const double qv = ws.q.dot(s.v);
    const double qu = ws.q.dot(s.u);
    const double denom = a + qq * h * h;

    const double rho_next = s.rho + (2.0 * qv - 2.0 * alpha * h * qu - 2.0 * qq * s.rho * h) * h / denom;
    const double i_h = (s.rho * a + (qv - alpha * h * qu) * h) / denom;

    ws.v_new = (2.0 * s.v - (4.0 * i_h * h) * ws.q - (4.0 * alpha * h) * s.u -
                (alpha * h * h) * s.v) /
               a;
    s.u += (0.5 * h) * (ws.v_new + s.v);
    s.v.swap(ws.v_new);
    s.rho = rho_next;
}

AugmentedState ssav_deterministic_substep(const ModelSpec& model, const AugmentedState& state,
                                          double h) {
    AugmentedState out = state;
    StepWorkspace ws(model.dim);
    ssav_deterministic_substep_inplace(model, out, h, ws);
    return out;
}

NoConvergence::NoConvergence(int max_iter)
    : std::runtime_error("fixed-point iteration did not converge in " + std::to_string(max_iter) +
                         " iterations; reduce the stepsize"),
      max_iter_(max_iter) {}

PicardResult ssav_implicit_oracle(const ModelSpec& model, const AugmentedState& state, double h,
                                  double tol, int max_iter) {
    const Vector q = q_vector(model, state.u);
    const double alpha = model.alpha;
    AugmentedState cur = state;
    AugmentedState nxt = state;
    for (int it = 1; it <= max_iter; ++it) {
        nxt.v = state.v - alpha * h * (state.u + cur.u) - (h * (cur.rho + state.rho)) * q;
        nxt.u = state.u + (0.5 * h) * (cur.v + state.v);
        nxt.rho = state.rho + 0.5 * h * q.dot(cur.v + state.v);
        const double diff = std::max({(nxt.v - cur.v).cwiseAbs().maxCoeff(),
                                      (nxt.u - cur.u).cwiseAbs().maxCoeff(),
                                      std::abs(nxt.rho - cur.rho)});
        std::swap(cur, nxt);
        if (!std::isfinite(diff)) {
            break;
        }
        if (diff < tol) {
            return {cur, it};
        }
    }
    throw NoConvergence(max_iter);
}

Vector ou_substep(const ModelSpec& model, const Vector& v_tri, double h, const StepNoise& noise) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("ou_substep needs h > 0");
    }
    return std::exp(-model.gamma * h) * v_tri + noise.ou_integral;
}

void ssav_step_inplace(const ModelSpec& model, AugmentedState& state, const OuCoefficients& ou,
                       const StepNoise& noise, StepWorkspace& ws) {
    ssav_deterministic_substep_inplace(model, state, ou.h, ws);
    state.v = ou.decay * state.v + noise.ou_integral;
}

AugmentedState ssav_step(const ModelSpec& model, const AugmentedState& state, double h,
                         const StepNoise& noise) {
    AugmentedState out = state;
    StepWorkspace ws(model.dim);
    ssav_step_inplace(model, out, ou_coefficients(model.gamma, h), noise, ws);
    return out;
}

void em_step_inplace(const ModelSpec& model, Vector& v, Vector& u, double h, const Vector& dw,
                     StepWorkspace& ws) {
    model.potential->gradient_into(u, ws.grad);
    model.apply_noise(dw, ws.q);
    ws.v_new = v - (model.kappa * h) * ws.grad - (model.gamma * h) * v + ws.q;
    u += h * v;
    v.swap(ws.v_new);
}

std::pair<Vector, Vector> em_step(const ModelSpec& model, const Vector& v, const Vector& u,
                                  double h, const Vector& dw) {
    Vector v2 = v;
    Vector u2 = u;
    StepWorkspace ws(model.dim);
    em_step_inplace(model, v2, u2, h, dw, ws);
    return {std::move(v2), std::move(u2)};
}

const char* method_name(Method method) {
    return method == Method::Ssav ? "ssav" : "em";
}

TrajectoryRecord run_trajectory(const ModelSpec& model, const AugmentedState& init, double h,
                                long n_steps, StepNoiseSource& noise, long record_every,
                                Method method, bool record_energy) {
    if (n_steps < 1 || record_every < 1) {
        throw std::invalid_argument("run_trajectory needs n_steps >= 1 and record_every >= 1");
    }
    if (!(h > 0.0)) {
        throw std::invalid_argument("run_trajectory needs h > 0");
    }
    TrajectoryRecord rec;
    const auto energy = [&](const AugmentedState& s) {
        return method == Method::Ssav ? modified_energy(model, s) : hamiltonian(model, s.v, s.u);
    };
    const auto record = [&](long n, const AugmentedState& s) {
        rec.times.push_back(static_cast<double>(n) * h);
        rec.states.push_back(s);
        if (record_energy) {
            rec.energies.push_back(energy(s));
        }
    };

    AugmentedState s = init;
    StepWorkspace ws(model.dim);
    StepNoise dn = StepNoise::zero(model.dim);
    const OuCoefficients ou = ou_coefficients(model.gamma, h);
    record(0, s);
    for (long n = 1; n <= n_steps; ++n) {
        noise.next(dn);
        if (method == Method::Ssav) {
            try {
                ssav_step_inplace(model, s, ou, dn, ws);
            } catch (const AssumptionViolation& e) {
                throw e.with_step(n - 1);
            }
        } else {
            em_step_inplace(model, s.v, s.u, h, dn.wiener_increment, ws);
            if (!(s.v.allFinite() && s.u.allFinite())) {
                rec.first_failure = n;
                record(n, s);
                break;
            }
        }
        if (n % record_every == 0) {
            record(n, s);
        }
    }
    return rec;
}

}  // namespace ssav
