#include "ssav/experiments.hpp"

#include "ssav/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ssav {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double norm_x(const Vector& v, const Vector& u) {
    return std::sqrt(v.squaredNorm() + u.squaredNorm());
}

std::int64_t pow2(int k) { return std::int64_t{1} << k; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Paths are processed in blocks; the observations of one block are stored and
// then folded into the accumulators in path order, so the result does not
// depend on the thread count.
constexpr long kBlock = 256;

enum PathStatus : char { kOk = 0, kNonFinite = 1, kViolation = 2 };

struct EnsembleRun {
    std::vector<double> times;
    // [record][obs]
    std::vector<stats::RunningStats> acc;
    int n_obs = 0;
    long failed_paths = 0;
    long violations = 0;
    long nonfinite_obs_paths = 0;

    const stats::RunningStats& at(std::size_t record, int obs) const {
        return acc[record * static_cast<std::size_t>(n_obs) + static_cast<std::size_t>(obs)];
    }
};

using Observer = std::function<void(const AugmentedState&, double t, double* out)>;
// Optional hook that sees each finished path (final state and status) in path order.
using PathHook = std::function<void(long path, const AugmentedState&, PathStatus)>;

// Runs the ensemble with direct noise at spec.h and folds n_obs observables at
// every recorded time. With tolerate_failures false, an AssumptionViolation on
// any path aborts the run.
EnsembleRun run_ensemble(const EnsembleSpec& spec, int n_obs, const Observer& observe,
                         bool tolerate_failures, const PathHook& hook = {}) {
    spec.model.validate();
    if (spec.n_paths < 1) {
        throw std::invalid_argument("ensemble needs at least one path");
    }
    if (spec.record_every < 1) {
        throw std::invalid_argument("record_every must be >= 1");
    }
    const long n_steps = spec.n_steps();
    const long n_records = n_steps / spec.record_every + 1;
    const int m = spec.model.dim;
    std::unique_ptr<StationarySampler> sampler;
    if (spec.init.kind == InitLaw::Kind::Stationary) {
        sampler = std::make_unique<StationarySampler>(spec.model);
    }

    EnsembleRun run;
    run.n_obs = n_obs;
    run.acc.resize(static_cast<std::size_t>(n_records * n_obs));
    for (long r = 0; r < n_records; ++r) {
        run.times.push_back(static_cast<double>(r * spec.record_every) * spec.h);
    }

    const std::size_t per_path = static_cast<std::size_t>(n_records * n_obs);
    std::vector<double> block_values(static_cast<std::size_t>(kBlock) * per_path);
    std::vector<char> block_status(static_cast<std::size_t>(kBlock));
    std::vector<AugmentedState> block_final(static_cast<std::size_t>(kBlock));
    const OuCoefficients ou = ou_coefficients(spec.model.gamma, spec.h);

    for (long first = 0; first < spec.n_paths; first += kBlock) {
        const long count = std::min(kBlock, spec.n_paths - first);
        parallel_for(count, spec.threads, [&](long i) {
            const long path = first + i;
            double* out = block_values.data() + static_cast<std::size_t>(i) * per_path;
            std::fill(out, out + per_path, kNaN);
            AugmentedState s = draw_initial(spec.model, spec.init, spec.seed,
                                            static_cast<std::uint64_t>(path), sampler.get());
            NoisePlan plan(spec.seed, static_cast<std::uint64_t>(path), spec.model.gamma, m,
                           spec.h, n_steps);
            CoupledNoise noise(spec.model, plan, 1);
            StepNoise dn = StepNoise::zero(m);
            StepWorkspace ws(m);
            PathStatus status = kOk;
            observe(s, 0.0, out);
            for (long n = 1; n <= n_steps; ++n) {
                noise.next(dn);
                if (spec.method == Method::Ssav) {
                    try {
                        ssav_step_inplace(spec.model, s, ou, dn, ws);
                    } catch (const AssumptionViolation& e) {
                        if (!tolerate_failures) {
                            std::cerr << "run aborted: path " << path << ", step " << n - 1
                                      << ": " << e.what() << '\n';
                            throw e.with_step(n - 1);
                        }
                        status = kViolation;
                        break;
                    }
                } else {
                    em_step_inplace(spec.model, s.v, s.u, spec.h, dn.wiener_increment, ws);
                }
                if (!s.finite()) {
                    status = kNonFinite;
                    break;
                }
                if (n % spec.record_every == 0) {
                    observe(s, static_cast<double>(n) * spec.h,
                            out + static_cast<std::size_t>((n / spec.record_every) * n_obs));
                }
            }
            block_status[static_cast<std::size_t>(i)] = status;
            block_final[static_cast<std::size_t>(i)] = std::move(s);
        });
        for (long i = 0; i < count; ++i) {
            const auto status = static_cast<PathStatus>(block_status[static_cast<std::size_t>(i)]);
            if (hook) {
                hook(first + i, block_final[static_cast<std::size_t>(i)], status);
            }
            if (status != kOk) {
                ++run.failed_paths;
                if (status == kViolation) {
                    ++run.violations;
                }
                continue;
            }
            const double* out = block_values.data() + static_cast<std::size_t>(i) * per_path;
            bool clean = true;
            for (std::size_t k = 0; k < per_path; ++k) {
                if (std::isfinite(out[k])) {
                    run.acc[k].add(out[k]);
                } else {
                    clean = false;
                }
            }
            if (!clean) {
                ++run.nonfinite_obs_paths;
            }
        }
    }
    return run;
}

}  // namespace

// ---------------------------------------------------------------------------

InitLaw InitLaw::unit_point(int dim) {
    const Vector x = Vector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    return {Kind::Point, x, x, 0.0};
}

AugmentedState draw_initial(const ModelSpec& model, const InitLaw& law, std::uint64_t seed,
                            std::uint64_t path_index, const StationarySampler* sampler) {
    const int m = model.dim;
    switch (law.kind) {
        case InitLaw::Kind::Point: {
            if (law.v0.size() == 0 && law.u0.size() == 0) {
                const InitLaw unit = InitLaw::unit_point(m);
                return make_initial_state(model, unit.v0, unit.u0);
            }
            if (law.v0.size() != m || law.u0.size() != m) {
                throw std::invalid_argument("initial point has the wrong dimension");
            }
            return make_initial_state(model, law.v0, law.u0);
        }
        case InitLaw::Kind::Gaussian: {
            const InitLaw centre = law.v0.size() == m ? law : InitLaw::unit_point(m);
            Vector v = centre.v0 + law.spread * initial_normals(seed, path_index, m, 2);
            Vector u = centre.u0 + law.spread * initial_normals(seed, path_index, m, 3);
            return make_initial_state(model, std::move(v), std::move(u));
        }
        case InitLaw::Kind::Stationary: {
            if (sampler == nullptr) {
                throw std::invalid_argument("stationary initial law needs a sampler");
            }
            PathUniforms uniforms(seed, path_index, 0);
            Vector u = sampler->draw_u(uniforms);
            return make_initial_state(model, sampler->draw_v(seed, path_index), std::move(u));
        }
    }
    throw std::logic_error("unknown initial law");
}

namespace test_functions {

TestFunction sine(double amplitude) {
    std::ostringstream name;
    name << amplitude << "sin(1+|x|)";
    return {name.str(), [amplitude](const Vector& v, const Vector& u) {
                return amplitude * std::sin(1.0 + norm_x(v, u));
            }};
}

TestFunction power(double coefficient, double p) {
    std::ostringstream name;
    if (coefficient != 1.0) {
        name << coefficient;
    }
    name << "|x|^" << p;
    return {name.str(), [coefficient, p](const Vector& v, const Vector& u) {
                if (p == 2.0) {
                    return coefficient * (v.squaredNorm() + u.squaredNorm());
                }
                return coefficient * std::pow(norm_x(v, u), p);
            }};
}

TestFunction exponential() {
    return {"exp(|x|)", [](const Vector& v, const Vector& u) { return std::exp(norm_x(v, u)); }};
}

TestFunction constant(double c) {
    std::ostringstream name;
    name << "const(" << c << ")";
    return {name.str(), [c](const Vector&, const Vector&) { return c; }};
}

}  // namespace test_functions

std::vector<TestFunction> finite_time_test_functions() {
    return {test_functions::sine(20.0), test_functions::power(1.0, 3.0),
            test_functions::exponential()};
}

std::vector<TestFunction> longtime_test_functions() {
    return {test_functions::sine(2.0), test_functions::power(2.0, 2.0)};
}

// ---------------------------------------------------------------------------

void StudyConfig::validate() const {
    model.validate();
    if (k_range.empty()) {
        throw std::invalid_argument("k_range is empty");
    }
    for (int k : k_range) {
        if (k < 0) {
            throw std::invalid_argument("k_range entries must be non-negative");
        }
    }
    if (k_ref <= *std::max_element(k_range.begin(), k_range.end())) {
        throw std::invalid_argument("k_ref must exceed every k in k_range");
    }
    if (k_ref > 30) {
        throw std::invalid_argument("k_ref above 30 is not supported");
    }
    if (n_paths < 2) {
        throw std::invalid_argument("a study needs at least 2 paths");
    }
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("horizon must be positive");
    }
}

std::vector<double> StudyResult::step_sizes() const {
    std::vector<double> h;
    for (const auto& r : rows) {
        h.push_back(r.h);
    }
    return h;
}

std::vector<double> StudyResult::errors() const {
    std::vector<double> e;
    for (const auto& r : rows) {
        e.push_back(r.error);
    }
    return e;
}

CoupledEndpoints run_coupled_endpoints(const StudyConfig& cfg) {
    cfg.validate();
    const auto start = Clock::now();
    CoupledEndpoints ends;
    ends.levels = cfg.k_range;
    std::sort(ends.levels.begin(), ends.levels.end());
    ends.levels.erase(std::unique(ends.levels.begin(), ends.levels.end()), ends.levels.end());
    ends.levels.push_back(cfg.k_ref);
    ends.n_paths = cfg.n_paths;
    const std::size_t n_levels = ends.levels.size();
    ends.states.resize(static_cast<std::size_t>(cfg.n_paths) * n_levels);

    const ModelSpec& model = cfg.model;
    const int m = model.dim;
    std::unique_ptr<StationarySampler> sampler;
    if (cfg.init.kind == InitLaw::Kind::Stationary) {
        sampler = std::make_unique<StationarySampler>(model);
    }
    std::vector<OuCoefficients> ou;
    for (int k : ends.levels) {
        ou.push_back(ou_coefficients(model.gamma, cfg.horizon / static_cast<double>(pow2(k))));
    }

    parallel_for(cfg.n_paths, cfg.threads, [&](long path) {
        const auto p = static_cast<std::uint64_t>(path);
        const AugmentedState init = draw_initial(model, cfg.init, cfg.seed, p, sampler.get());
        NoisePlan plan = sample_fine_pairs(cfg.seed, p, model.gamma, m, cfg.k_ref, cfg.horizon);
        plan.materialize();
        StepNoise dn = StepNoise::zero(m);
        StepWorkspace ws(m);
        for (std::size_t level = 0; level < n_levels; ++level) {
            const int k = ends.levels[level];
            CoupledNoise noise(model, plan, pow2(cfg.k_ref - k));
            AugmentedState s = init;
            const std::int64_t n_steps = pow2(k);
            for (std::int64_t n = 0; n < n_steps; ++n) {
                noise.next(dn);
                try {
                    ssav_step_inplace(model, s, ou[level], dn, ws);
                } catch (const AssumptionViolation& e) {
                    std::cerr << "study aborted: path " << path << ", k=" << k << ", step " << n
                              << ": " << e.what() << '\n';
                    throw e.with_step(static_cast<long>(n));
                }
            }
            ends.states[static_cast<std::size_t>(path) * n_levels + level] = std::move(s);
        }
    });
    ends.seconds = seconds_since(start);
    return ends;
}

namespace {

StudyResult start_result(const std::string& name, const StudyConfig& cfg) {
    StudyResult res;
    res.name = name;
    res.seed = cfg.seed;
    res.n_paths = cfg.n_paths;
    return res;
}

void finish_fit(StudyResult& res) {
    try {
        const auto h = res.step_sizes();
        const auto e = res.errors();
        res.fit = stats::slope_fit(h, e);
    } catch (const stats::FitError& e) {
        res.fit.reset();
        res.fit_note = e.what();
    }
}

// RMS of per-path values d_p ≥ 0: sqrt(mean d²), SE by the delta method.
ConvergenceRow rms_row(int k, double h, const stats::RunningStats& squares) {
    ConvergenceRow row{k, h, 0.0, 0.0};
    row.error = std::sqrt(std::max(0.0, squares.mean()));
    if (row.error > 0.0) {
        row.std_error = squares.stderr_of_mean() / (2.0 * row.error);
    }
    return row;
}

template <typename Distance>
StudyResult rms_study(const std::string& name, const StudyConfig& cfg,
                      const CoupledEndpoints& ends, Distance distance) {
    StudyResult res = start_result(name, cfg);
    const std::size_t ref = ends.reference_level();
    for (std::size_t level = 0; level < ref; ++level) {
        stats::RunningStats squares;
        for (long p = 0; p < ends.n_paths; ++p) {
            const double d = distance(ends.at(p, ref), ends.at(p, level));
            squares.add(d * d);
        }
        const int k = ends.levels[level];
        res.rows.push_back(rms_row(k, cfg.horizon / static_cast<double>(pow2(k)), squares));
    }
    res.seconds = ends.seconds;
    finish_fit(res);
    return res;
}

}  // namespace

StudyResult strong_error_from(const StudyConfig& cfg, const CoupledEndpoints& ends) {
    return rms_study("strong", cfg, ends, [](const AugmentedState& a, const AugmentedState& b) {
        return std::sqrt((a.v - b.v).squaredNorm() + (a.u - b.u).squaredNorm());
    });
}

StudyResult strong_error_study(const StudyConfig& cfg) {
    return strong_error_from(cfg, run_coupled_endpoints(cfg));
}

StudyResult energy_error_from(const StudyConfig& cfg, const CoupledEndpoints& ends) {
    const ModelSpec& model = cfg.model;
    return rms_study("energy", cfg, ends,
                     [&model](const AugmentedState& a, const AugmentedState& b) {
                         return std::abs(modified_energy(model, a) - modified_energy(model, b));
                     });
}

StudyResult energy_error_study(const StudyConfig& cfg) {
    return energy_error_from(cfg, run_coupled_endpoints(cfg));
}

std::vector<StudyResult> weak_error_from(const StudyConfig& cfg, const CoupledEndpoints& ends) {
    const auto& functions =
        cfg.test_functions.empty() ? finite_time_test_functions() : cfg.test_functions;
    const std::size_t ref = ends.reference_level();
    std::vector<StudyResult> out;
    for (const auto& phi : functions) {
        StudyResult res = start_result("weak:" + phi.name, cfg);
        // A path is used only if φ is finite at every level.
        std::vector<double> values(static_cast<std::size_t>(ends.n_paths) * ends.levels.size());
        std::vector<bool> usable(static_cast<std::size_t>(ends.n_paths), true);
        for (long p = 0; p < ends.n_paths; ++p) {
            for (std::size_t level = 0; level < ends.levels.size(); ++level) {
                const auto& s = ends.at(p, level);
                const double y = phi(s.v, s.u);
                values[static_cast<std::size_t>(p) * ends.levels.size() + level] = y;
                if (!std::isfinite(y)) {
                    usable[static_cast<std::size_t>(p)] = false;
                }
            }
        }
        for (long p = 0; p < ends.n_paths; ++p) {
            if (!usable[static_cast<std::size_t>(p)]) {
                ++res.excluded_paths;
            }
        }
        if (res.excluded_paths > 0) {
            std::clog << "weak study " << phi.name << ": " << res.excluded_paths
                      << " path(s) excluded (non-finite test function)\n";
        }
        for (std::size_t level = 0; level < ref; ++level) {
            stats::RunningStats diff;
            for (long p = 0; p < ends.n_paths; ++p) {
                if (!usable[static_cast<std::size_t>(p)]) {
                    continue;
                }
                const std::size_t base = static_cast<std::size_t>(p) * ends.levels.size();
                diff.add(values[base + level] - values[base + ref]);
            }
            const int k = ends.levels[level];
            res.rows.push_back({k, cfg.horizon / static_cast<double>(pow2(k)),
                                std::abs(diff.mean()), diff.stderr_of_mean()});
        }
        res.seconds = ends.seconds;
        finish_fit(res);
        out.push_back(std::move(res));
    }
    return out;
}

std::vector<StudyResult> weak_error_study(const StudyConfig& cfg) {
    return weak_error_from(cfg, run_coupled_endpoints(cfg));
}

// ---------------------------------------------------------------------------

StateSampler uniform_state_sampler(const ModelSpec& model, double box) {
    return [model, box](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> coord(-box, box);
        std::uniform_real_distribution<double> shift(-1.0, 1.0);
        AugmentedState s;
        s.v.resize(model.dim);
        s.u.resize(model.dim);
        for (int i = 0; i < model.dim; ++i) {
            s.v[i] = coord(rng);
        }
        for (int i = 0; i < model.dim; ++i) {
            s.u[i] = coord(rng);
        }
        s.rho = rho_init(model, s.u) + shift(rng);
        return s;
    };
}

EnergyIdentityReport energy_identity_suite(const ModelSpec& model, long n_cases,
                                           const StateSampler& sampler,
                                           std::span<const double> h_set, std::uint64_t seed) {
    if (n_cases < 1) {
        throw std::invalid_argument("energy identity suite needs n_cases >= 1");
    }
    std::mt19937_64 rng(seed);
    EnergyIdentityReport report;
    StepWorkspace ws(model.dim);
    AugmentedState after;
    for (long c = 0; c < n_cases; ++c) {
        const AugmentedState before = sampler(rng);
        const double e0 = modified_energy(model, before);
        for (double h : h_set) {
            after = before;
            ssav_deterministic_substep_inplace(model, after, h, ws);
            const double violation =
                std::abs(modified_energy(model, after) - e0) / (1.0 + std::abs(e0));
            ++report.cases;
            if (!(violation <= report.max_violation)) {
                report.max_violation = violation;
                report.worst_state = before;
                report.worst_h = h;
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

long EnsembleSpec::n_steps() const {
    if (!(h > 0.0) || !(horizon > 0.0)) {
        throw std::invalid_argument("h and horizon must be positive");
    }
    const double ratio = horizon / h;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * n) {
        throw std::invalid_argument("horizon must be an integer multiple of h");
    }
    return static_cast<long>(n);
}

EvolutionStudy energy_evolution_study(const EnsembleSpec& spec) {
    const auto start = Clock::now();
    const ModelSpec& model = spec.model;
    const auto run = run_ensemble(
        spec, 1,
        [&model](const AugmentedState& s, double, double* out) {
            out[0] = modified_energy(model, s);
        },
        false);
    EvolutionStudy study;
    study.initial_energy = run.at(0, 0).mean();
    const double slope = model.noise_norm_sq() / 2.0;
    for (std::size_t r = 0; r < run.times.size(); ++r) {
        const auto& a = run.at(r, 0);
        EvolutionRow row{run.times[r], a.mean(), study.initial_energy + slope * run.times[r],
                         a.stderr_of_mean(), false};
        row.flagged = row.value - row.bound > 4.0 * row.std_error + 1e-10 * std::abs(row.bound);
        study.any_flag = study.any_flag || row.flagged;
        study.rows.push_back(row);
    }
    study.seconds = seconds_since(start);
    return study;
}

std::vector<MomentStudy> moment_growth_study(const EnsembleSpec& spec,
                                             std::span<const int> p_list) {
    if (p_list.empty()) {
        throw std::invalid_argument("moment study needs at least one p");
    }
    for (int p : p_list) {
        if (p < 1 || p > 3) {
            throw std::invalid_argument("moment order p must be 1, 2 or 3");
        }
    }
    const ModelSpec& model = spec.model;
    const std::vector<int> ps(p_list.begin(), p_list.end());
    const auto run = run_ensemble(
        spec, static_cast<int>(ps.size()),
        [&](const AugmentedState& s, double, double* out) {
            const double e = modified_energy(model, s);
            for (std::size_t j = 0; j < ps.size(); ++j) {
                out[j] = std::pow(e, ps[j]);
            }
        },
        false);
    const double slope = model.noise_norm_sq() / 2.0;
    std::vector<MomentStudy> out;
    for (std::size_t j = 0; j < ps.size(); ++j) {
        MomentStudy study;
        study.p = ps[j];
        const int obs = static_cast<int>(j);
        const double initial = run.at(0, obs).mean();
        std::vector<double> ts, growth;
        for (std::size_t r = 0; r < run.times.size(); ++r) {
            const auto& a = run.at(r, obs);
            const double t = run.times[r];
            EvolutionRow row{t, a.mean(), kNaN, a.stderr_of_mean(), false};
            if (study.p == 1) {
                row.bound = initial + slope * t;
                row.flagged = row.value - row.bound > 4.0 * row.std_error + 1e-10 * std::abs(row.bound);
                study.linear_bound_ok = study.linear_bound_ok && !row.flagged;
            }
            if (t > 0.0 && t >= spec.horizon / 2.0 - 1e-12) {
                ts.push_back(t);
                growth.push_back(row.value - initial);
            }
            study.rows.push_back(row);
        }
        try {
            study.growth = stats::loglog_fit(ts, growth);
        } catch (const stats::FitError& e) {
            study.growth_note = e.what();
        }
        out.push_back(std::move(study));
    }
    return out;
}

double expint_envelope_exponent(double initial_energy, double noise_norm_sq, double delta,
                                double lambda, double t) {
    return std::exp(-lambda * t) * delta * (initial_energy + noise_norm_sq * t / 2.0);
}

ExpIntegrabilityProbe exp_integrability_probe(const EnsembleSpec& spec, double delta,
                                              double lambda) {
    const ModelSpec& model = spec.model;
    const double gn = model.noise_norm_sq();
    if (!(delta > 0.0)) {
        throw std::invalid_argument("delta must be positive");
    }
    if (lambda < std::max(delta * gn - 2.0 * model.gamma, 0.0)) {
        throw std::invalid_argument("lambda must be >= max(delta*|Gamma|^2 - 2*gamma, 0)");
    }
    ExpIntegrabilityProbe probe;
    probe.delta = delta;
    probe.lambda = lambda;
    const auto run = run_ensemble(
        spec, 2,
        [&](const AugmentedState& s, double t, double* out) {
            out[0] = std::exp(std::exp(-lambda * t) * delta * modified_energy(model, s));
            // exp(δ H(v₀, u₀)), needed only at t = 0.
            out[1] = t == 0.0 ? std::exp(delta * hamiltonian(model, s.v, s.u)) : 0.0;
        },
        false);
    probe.overflow_paths = run.nonfinite_obs_paths;
    const double horizon_factor = lambda == 0.0 ? spec.horizon : 1.0 / lambda;
    const double bound = std::exp(delta / 2.0 * gn * horizon_factor) * run.at(0, 1).mean();
    for (std::size_t r = 0; r < run.times.size(); ++r) {
        const auto& a = run.at(r, 0);
        EvolutionRow row{run.times[r], a.mean(), bound, a.stderr_of_mean(), false};
        row.flagged = row.value - row.bound > 4.0 * row.std_error + 1e-12 * row.bound;
        probe.below_bound = probe.below_bound && !row.flagged;
        probe.rows.push_back(row);
    }
    return probe;
}

std::vector<LongtimeCurve> longtime_weak_study(const EnsembleSpec& spec,
                                               std::span<const TestFunction> functions) {
    const ModelSpec& model = spec.model;
    if (model.dim != 1) {
        throw std::invalid_argument("long-time weak study requires dim = 1");
    }
    if (!model.density) {
        throw std::invalid_argument("long-time weak study needs a reference density");
    }
    if (!model.density_applies()) {
        std::clog << "warning: the reference density is not invariant for this noise matrix\n";
    }
    std::vector<TestFunction> phis(functions.begin(), functions.end());
    if (phis.empty()) {
        phis = longtime_test_functions();
    }
    std::vector<LongtimeCurve> curves;
    for (const auto& phi : phis) {
        Vector vv(1), uu(1);
        LongtimeCurve c;
        c.name = phi.name;
        c.reference = stationary_expectation(*model.density, [&](double v, double u) {
            vv[0] = v;
            uu[0] = u;
            return phi(vv, uu);
        });
        curves.push_back(std::move(c));
    }
    const auto run = run_ensemble(
        spec, static_cast<int>(phis.size()),
        [&](const AugmentedState& s, double, double* out) {
            for (std::size_t j = 0; j < phis.size(); ++j) {
                out[j] = phis[j](s.v, s.u);
            }
        },
        false);
    for (std::size_t j = 0; j < phis.size(); ++j) {
        for (std::size_t r = 0; r < run.times.size(); ++r) {
            const auto& a = run.at(r, static_cast<int>(j));
            const double se = a.stderr_of_mean();
            curves[j].rows.push_back(
                {run.times[r], std::abs(a.mean() - curves[j].reference), 0.02 + 3.0 * se, se,
                 false});
        }
    }
    return curves;
}

DensityResult density_study(const EnsembleSpec& spec, int bins) {
    if (bins < 1) {
        throw std::invalid_argument("bins must be >= 1");
    }
    const auto start = Clock::now();
    const ModelSpec& model = spec.model;
    const int m = model.dim;
    DensityResult res;
    res.endpoints.resize(static_cast<std::size_t>(spec.n_paths));
    res.diverged.assign(static_cast<std::size_t>(spec.n_paths), false);
    EnsembleSpec endpoint_spec = spec;
    endpoint_spec.record_every = spec.n_steps();
    run_ensemble(
        endpoint_spec, 0, [](const AugmentedState&, double, double*) {}, true,
        [&](long path, const AugmentedState& s, PathStatus status) {
            res.endpoints[static_cast<std::size_t>(path)] = s;
            if (status != kOk) {
                res.diverged[static_cast<std::size_t>(path)] = true;
                if (status == kViolation) {
                    ++res.assumption_violations;
                } else {
                    ++res.nan_count;
                }
            }
        });

    std::vector<std::vector<double>> coords(static_cast<std::size_t>(m));
    for (std::size_t p = 0; p < res.endpoints.size(); ++p) {
        if (res.diverged[p]) {
            continue;
        }
        for (int i = 0; i < m; ++i) {
            coords[static_cast<std::size_t>(i)].push_back(res.endpoints[p].u[i]);
        }
    }

    double lo = -10.0, hi = 10.0;
    if (model.density) {
        lo = model.density->box_lo;
        hi = model.density->box_hi;
    }
    std::vector<quad::TabulatedCdf> cdfs;
    if (model.density && model.density->normalizer_u && m <= 2) {
        cdfs = coordinate_cdfs(*model.density, m);
    }
    for (int i = 0; i < m; ++i) {
        stats::Histogram hist(lo, hi, bins);
        for (double x : coords[static_cast<std::size_t>(i)]) {
            hist.add(x);
        }
        std::vector<double> ref;
        if (!cdfs.empty()) {
            const auto& cdf = cdfs[static_cast<std::size_t>(i)];
            for (std::size_t b = 0; b < hist.counts.size(); ++b) {
                ref.push_back((cdf(hist.bin_right(b)) - cdf(hist.bin_left(b))) / hist.width());
            }
        }
        res.histograms.push_back(std::move(hist));
        res.reference_bin_density.push_back(std::move(ref));
    }
    if (!cdfs.empty()) {
        if (!model.density_applies()) {
            std::clog << "warning: the reference density is not invariant for this noise matrix\n";
        }
        for (int i = 0; i < m; ++i) {
            const auto& xs = coords[static_cast<std::size_t>(i)];
            if (xs.size() < 2) {
                res.ks.clear();
                break;
            }
            const auto& cdf = cdfs[static_cast<std::size_t>(i)];
            res.ks.push_back(stats::ks_statistic(xs, [&cdf](double x) { return cdf(x); }));
        }
    }
    res.seconds = seconds_since(start);
    return res;
}

}  // namespace ssav
