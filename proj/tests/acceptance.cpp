// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gating criterion fails. Tolerances are pinned below.

#include "ssav/experiments.hpp"
#include "ssav/integrators.hpp"
#include "ssav/noise.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <vector>
#include <string>

using namespace ssav;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail, bool gating = true) {
    const char* tag = pass ? "PASS" : (gating ? "FAIL" : "INFO");
    std::printf("%s  %-44s %s\n", tag, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass && gating) {
        ++g_failures;
    }
}

std::string f(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

ModelSpec gaussian_mixture() {
    return make_model(1, 2.0, 1.0, 2.0, 1.0, 1000.0, builtin_gaussian_mixture(1.0, 0.5, 2.0));
}

ModelSpec double_well(int dim) {
    return make_model(dim, 1.0, 1.0, std::sqrt(2.0), 1.0, 1000.0, builtin_double_well(dim, 1.0));
}

ModelSpec bimodal() {
    return make_model(2, 0.1, 0.05, 0.1 * Matrix::Identity(2, 2), 1.0, 1000.0,
                      std::make_shared<const Potential>(builtin_bimodal()),
                      std::make_shared<const AnalyticDensity>(bimodal_density(0.1)));
}

StudyConfig convergence(const ModelSpec& m, long paths, std::uint64_t seed) {
    StudyConfig cfg;
    cfg.model = m;
    cfg.horizon = 1.0;
    cfg.k_range = {6, 7, 8, 9, 10, 11};
    cfg.k_ref = 14;
    cfg.n_paths = paths;
    cfg.seed = seed;
    cfg.init = InitLaw::unit_point(m.dim);
    return cfg;
}

EnsembleSpec ensemble(const ModelSpec& m, double h, double horizon, long paths, std::uint64_t seed,
                      Method method = Method::Ssav) {
    EnsembleSpec spec;
    spec.model = m;
    spec.h = h;
    spec.horizon = horizon;
    spec.n_paths = paths;
    spec.seed = seed;
    spec.init = InitLaw::unit_point(m.dim);
    spec.method = method;
    spec.record_every = std::max(1L, std::lround(0.0625 / h));
    return spec;
}

std::string slope_detail(const StudyResult& r) {
    if (!r.fit) {
        return "no fit: " + r.fit_note;
    }
    return "slope " + f(r.fit->slope) + " +/- " + f(r.fit->std_error);
}

bool slope_in(const StudyResult& r, double lo, double hi) {
    return r.fit && r.fit->slope >= lo && r.fit->slope <= hi;
}

void strong_energy_weak() {
    const auto gm = gaussian_mixture();
    auto cfg = convergence(gm, 1000, 1);
    const auto ends = run_coupled_endpoints(cfg);
    const auto strong = strong_error_from(cfg, ends);
    report("strong order, gaussian mixture", slope_in(strong, 0.85, 1.15),
           slope_detail(strong) + " in [0.85, 1.15]");
    const auto energy = energy_error_from(cfg, ends);
    report("energy-error order, gaussian mixture", slope_in(energy, 0.85, 1.15),
           slope_detail(energy) + " in [0.85, 1.15]");

    auto wcfg = convergence(gm, 5000, 2);
    wcfg.test_functions = {test_functions::sine(20.0)};
    const auto weak = weak_error_study(wcfg);
    report("weak order, 20 sin(1+|x|)", slope_in(weak[0], 0.7, 1.3),
           slope_detail(weak[0]) + " in [0.7, 1.3]");
}

void energy_identities() {
    std::vector<double> hs;
    for (int e = 0; e <= 10; ++e) {
        hs.push_back(std::ldexp(1.0, -e));
    }
    double worst = 0.0;
    for (const ModelSpec& m : {gaussian_mixture(), double_well(1), double_well(2), bimodal()}) {
        const auto rep = energy_identity_suite(m, 100000, uniform_state_sampler(m), hs, 3);
        worst = std::max(worst, rep.max_violation);
    }
    report("discrete energy identity", worst <= 1e-10, "max violation " + f(worst) + " <= 1e-10");

    // Explicit update against the Picard solution of the implicit system.
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> hdist(-10.0, -4.0);
    double picard_worst = 0.0;
    double rho_worst = 0.0;
    for (const ModelSpec& m : {gaussian_mixture(), double_well(1), double_well(2), bimodal()}) {
        const StateSampler sampler = uniform_state_sampler(m);
        for (long i = 0; i < 10000; ++i) {
            const AugmentedState s = sampler(rng);
            const double h = std::exp2(hdist(rng));
            const AugmentedState ex = ssav_deterministic_substep(m, s, h);
            const AugmentedState pc = ssav_implicit_oracle(m, s, h, 1e-13).state;
            const double diff = std::max({(ex.u - pc.u).lpNorm<Eigen::Infinity>(),
                                          (ex.v - pc.v).lpNorm<Eigen::Infinity>(),
                                          std::abs(ex.rho - pc.rho)});
            picard_worst = std::max(picard_worst, diff);
            const double twice_i = 2.0 * i_factor(m, s, q_vector(m, s.u), h);
            rho_worst = std::max(rho_worst, std::abs(ex.rho + s.rho - twice_i) / std::abs(twice_i));
        }
    }
    report("explicit update equals implicit solution", picard_worst <= 1e-10,
           "max-norm diff " + f(picard_worst) + " <= 1e-10");
    report("rho identity", rho_worst <= 1e-12, "max rel residual " + f(rho_worst) + " <= 1e-12");
}

void ou_exactness() {
    // One OU substep from a fixed v: mean e^{-γh}v₀, variance σ²(1 − e^{−2γh})/(2γ).
    const ModelSpec m = double_well(1);
    const double h = 0.5;
    const long n = 1000000;
    const auto c = ou_coefficients(m.gamma, h);
    NoisePlan plan(5, 0, m.gamma, 1, h, n);
    CoupledNoise source(m, plan, 1);
    StepNoise noise = StepNoise::zero(1);
    Vector v0(1);
    v0[0] = 1.5;
    stats::RunningStats stat;
    for (long i = 0; i < n; ++i) {
        source.next(noise);
        const double x = ou_substep(m, v0, h, noise)[0];
        stat.add(x);
    }
    const double exp_mean = c.decay * v0[0];
    const double exp_var = m.noise_norm_sq() * c.ou_var;
    const double var_se = exp_var * std::sqrt(2.0 / static_cast<double>(n));
    const bool ok = std::abs(stat.mean() - exp_mean) <= 4.0 * stat.stderr_of_mean() &&
                    std::abs(stat.variance() - exp_var) <= 4.0 * var_se;
    report("exact OU substep law", ok,
           "mean err " + f(stat.mean() - exp_mean) + ", var err " + f(stat.variance() - exp_var) +
               " (within 4 SE)");

    // Semigroup: two composed half steps carry the one-step law.
    const auto half = ou_coefficients(m.gamma, h / 2);
    const double analytic = half.decay * half.decay * half.ou_var + half.ou_var;
    const double analytic_err = std::abs(analytic - c.ou_var) / c.ou_var;
    NoisePlan fine(6, 0, m.gamma, 1, h / 2, 2 * n);
    CoupledNoise composed(m, fine, 2);
    stats::RunningStats ou_stat, w_stat, cross;
    for (long i = 0; i < n; ++i) {
        composed.next(noise);
        ou_stat.add(noise.ou_integral[0]);
        w_stat.add(noise.wiener_increment[0]);
        cross.add(noise.ou_integral[0] * noise.wiener_increment[0]);
    }
    const double s2 = m.noise_norm_sq();
    const double ou_se = s2 * c.ou_var * std::sqrt(2.0 / static_cast<double>(n));
    const double w_se = h * std::sqrt(2.0 / static_cast<double>(n));
    // The Wiener increment is kept raw (pre-Γ). Var(XY) for a centred
    // Gaussian pair is σx²σy² + c².
    const double cov = std::sqrt(s2) * c.cross_cov;
    const double cross_se = std::sqrt((s2 * c.ou_var * h + cov * cov) / static_cast<double>(n));
    const bool semigroup_ok = analytic_err <= 1e-14 &&
                              std::abs(ou_stat.variance() - s2 * c.ou_var) <= 4.0 * ou_se &&
                              std::abs(w_stat.variance() - h) <= 4.0 * w_se &&
                              std::abs(cross.mean() - cov) <= 4.0 * cross_se;
    report("OU semigroup composition", semigroup_ok,
           "analytic rel err " + f(analytic_err) + ", MC var err " +
               f(ou_stat.variance() - s2 * c.ou_var) + ", cov err " + f(cross.mean() - cov) +
               " (within 4 SE)");
}

void energy_law_and_moments() {
    const auto dw = double_well(1);
    const auto st = energy_evolution_study(ensemble(dw, 1.0 / 64, 10.0, 5000, 6));
    report("mean energy below linear bound", !st.any_flag,
           std::string(st.any_flag ? "flagged" : "no flagged") + " rows over t in [0, 10]");

    auto spec = ensemble(dw, 1.0 / 64, 50.0, 2000, 7);
    spec.record_every = 16;
    const std::vector<int> ps{2};
    const auto ms = moment_growth_study(spec, ps);
    const bool ok = !ms[0].growth || ms[0].growth->slope <= 2.3;
    report("second moment growth exponent", ok,
           (ms[0].growth ? "exponent " + f(ms[0].growth->slope) : "no growth (" + ms[0].growth_note + ")") +
               " <= 2.3");
}

void longtime() {
    auto spec = ensemble(double_well(1), 1.0 / 512, 30.0, 5000, 8);
    spec.record_every = 32;
    const std::vector<TestFunction> fns{longtime_test_functions()[1]};
    const auto curves = longtime_weak_study(spec, fns);
    const auto& rows = curves[0].rows;
    const auto& last = rows.back();
    report("long-time weak error at t=30", last.value <= last.bound,
           "error " + f(last.value) + " <= " + f(last.bound));

    stats::RunningStats head, tail;
    double head_se = 0.0, tail_se = 0.0;
    for (const auto& r : rows) {
        if (r.t <= 2.0) {
            head.add(r.value);
            head_se = std::max(head_se, r.std_error);
        } else if (r.t >= 20.0) {
            tail.add(r.value);
            tail_se = std::max(tail_se, r.std_error);
        }
    }
    report("long-time error does not grow", tail.mean() < head.mean() + 3.0 * (head_se + tail_se),
           "mean tail " + f(tail.mean()) + " vs head " + f(head.mean()) + " + 3 SE");
}

void sampling() {
    const auto gm = gaussian_mixture();
    const auto fine = density_study(ensemble(gm, 1.0 / 128, 500.0, 5000, 9));
    report("gaussian mixture sampling, h=2^-7",
           fine.nan_count == 0 && !fine.ks.empty() && fine.ks[0] <= 0.05,
           "KS " + (fine.ks.empty() ? std::string("n/a") : f(fine.ks[0])) + " <= 0.05, diverged " +
               std::to_string(fine.nan_count));

    const auto coarse = density_study(ensemble(gm, 0.25, 500.0, 5000, 10));
    report("SSAV at h=2^-2 stays finite and accurate",
           coarse.nan_count == 0 && !coarse.ks.empty() && coarse.ks[0] <= 0.1,
           "KS " + (coarse.ks.empty() ? std::string("n/a") : f(coarse.ks[0])) +
               " <= 0.1, diverged " + std::to_string(coarse.nan_count));

    const auto em = density_study(ensemble(gm, 0.25, 500.0, 5000, 10, Method::EulerMaruyama));
    const bool em_bad = em.nan_count > 0 || em.ks.empty() || em.ks[0] > 0.2;
    report("Euler-Maruyama at h=2^-2 fails", em_bad,
           "diverged " + std::to_string(em.nan_count) +
               (em.ks.empty() ? std::string() : ", KS " + f(em.ks[0])));

    const auto bm = bimodal();
    const auto ssav = density_study(ensemble(bm, 1.0 / 16, 500.0, 20000, 11));
    double worst = 0.0;
    for (double k : ssav.ks) {
        worst = std::max(worst, k);
    }
    report("bimodal sampling, h=2^-4", ssav.nan_count == 0 && ssav.ks.size() == 2 && worst <= 0.08,
           "max KS " + f(worst) + " <= 0.08, diverged " + std::to_string(ssav.nan_count));

    const auto bem = density_study(ensemble(bm, 1.0 / 16, 500.0, 20000, 11, Method::EulerMaruyama));
    double em_worst = 0.0;
    for (double k : bem.ks) {
        em_worst = std::max(em_worst, k);
    }
    report("bimodal: Euler-Maruyama at least 2x worse",
           bem.nan_count > 0 || em_worst >= 2.0 * worst,
           "EM KS " + f(em_worst) + " vs SSAV " + f(worst) + ", EM diverged " +
               std::to_string(bem.nan_count));
}

void expint() {
    const auto dw = double_well(1);
    const double delta = 1e-3;
    const double lambda = delta * dw.noise_norm_sq();
    const auto probe = exp_integrability_probe(ensemble(dw, 1.0 / 64, 5.0, 10000, 12), delta, lambda);
    report("exponential integrability probe (non-gating)", probe.below_bound,
           "overflow paths " + std::to_string(probe.overflow_paths), false);
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select sections by name: identities, ou, convergence,
    // energy, longtime, sampling, expint.
    const std::vector<std::pair<std::string, void (*)()>> sections{
        {"identities", energy_identities}, {"ou", ou_exactness},
        {"convergence", strong_energy_weak}, {"energy", energy_law_and_moments},
        {"longtime", longtime}, {"sampling", sampling}, {"expint", expint}};
    const auto start = std::chrono::steady_clock::now();
    for (const auto& [name, run] : sections) {
        bool selected = argc == 1;
        for (int i = 1; i < argc; ++i) {
            selected = selected || name == argv[i];
        }
        if (selected) {
            run();
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d gating failure(s), %.0f s\n", g_failures, secs);
    return g_failures == 0 ? 0 : 1;
}
