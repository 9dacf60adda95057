// Command-line driver: check, simulate, study, sample.

#include "ssav/config.hpp"
#include "ssav/output.hpp"
#include "ssav/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssav;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitUsage = 64;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "2^-7", "0.0078125" or "1/128".
double parse_step(const std::string& text) {
    try {
        if (const auto caret = text.find('^'); caret != std::string::npos) {
            return std::pow(std::stod(text.substr(0, caret)), std::stod(text.substr(caret + 1)));
        }
        if (const auto slash = text.find('/'); slash != std::string::npos) {
            return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
        }
        std::size_t used = 0;
        const double x = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return x;
    } catch (const std::exception&) {
        throw UsageError("cannot parse number '" + text + "'");
    }
}

/// "6..11" → {6, …, 11}.
std::vector<int> parse_k_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        throw UsageError("--k-range must look like a..b");
    }
    int a = 0, b = 0;
    try {
        a = std::stoi(text.substr(0, dots));
        b = std::stoi(text.substr(dots + 2));
    } catch (const std::exception&) {
        throw UsageError("--k-range must look like a..b");
    }
    if (a < 0 || b < a) {
        throw UsageError("--k-range needs 0 <= a <= b");
    }
    std::vector<int> ks;
    for (int k = a; k <= b; ++k) {
        ks.push_back(k);
    }
    return ks;
}

struct Common {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
};

struct Run {
    RunManifest manifest;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    fs::path out;

    Run(const std::string& command, const Common& c, const RunConfig& cfg) : out(c.out_dir) {
        manifest.command = command;
        manifest.config = cfg.snapshot;
        manifest.seed = c.seed;
        manifest.started_at = utc_now();
        fs::create_directories(out);
    }

    fs::path file(const std::string& name) {
        manifest.outputs.push_back(name);
        return out / name;
    }

    void finish() {
        manifest.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_json(out / "manifest.json", manifest.to_json());
    }
};

std::string fmt(double x, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

// ---------------------------------------------------------------------------

int cmd_check(const Common& c) {
    const RunConfig cfg = load_config(c.config_path, false);
    const ModelSpec& model = cfg.model;
    Run run("check", c, cfg);
    bool ok = true;

    const auto probes = default_floor_probes(model.dim, c.seed);
    const auto floor = sav_floor_check(model, probes);
    std::cout << "check                 value            limit   result\n";
    std::cout << "sav_floor (min)       " << fmt(floor.min_value, 10) << "    >= 1    "
              << (floor.ok ? "ok" : "FAIL") << '\n';
    run.manifest.verdicts["sav_floor"] = {{"ok", floor.ok}, {"min_value", floor.min_value},
                                          {"argmin", format_vector(floor.argmin)}};
    if (!floor.ok) {
        std::cerr << "assumption violated: kappa*Phi + C_H - alpha*|u|^2 = " << floor.min_value
                  << " < 1 at u = " << format_vector(floor.argmin) << '\n';
        run.finish();
        return kExitRuntime;
    }
    model.validate();

    // Gradient check on a coarse lattice (or random points in high dimension).
    std::vector<Vector> grad_points;
    for (std::size_t i = 0; i < probes.size(); i += std::max<std::size_t>(1, probes.size() / 2000)) {
        if (probes[i].lpNorm<Eigen::Infinity>() <= 5.0) {
            grad_points.push_back(probes[i]);
        }
    }
    const auto grad = grad_check(*model.potential, grad_points, 1e-6);
    const bool grad_ok = grad.finite && grad.max_relative_error <= 1e-5;
    ok = ok && grad_ok;
    std::cout << "grad_check            " << fmt(grad.max_relative_error) << "    <= 1e-5 "
              << (grad_ok ? "ok" : "FAIL") << '\n';
    run.manifest.verdicts["grad_check"] = {{"ok", grad_ok},
                                           {"max_relative_error", grad.max_relative_error},
                                           {"worst_point", format_vector(grad.worst_point)}};

    std::vector<double> hs;
    for (int k = 0; k <= 10; ++k) {
        hs.push_back(std::ldexp(1.0, -k));
    }
    const auto energy =
        energy_identity_suite(model, 10000, uniform_state_sampler(model), hs, c.seed);
    const bool energy_ok = energy.max_violation <= 1e-10;
    ok = ok && energy_ok;
    std::cout << "energy_identity       " << fmt(energy.max_violation) << "    <= 1e-10 "
              << (energy_ok ? "ok" : "FAIL") << '\n';
    run.manifest.verdicts["energy_identity"] = {{"ok", energy_ok},
                                                {"max_violation", energy.max_violation},
                                                {"cases", energy.cases}};
    run.finish();
    return ok ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
    std::string h = "2^-6";
    std::string horizon = "1";
    std::string method = "ssav";
    long record_every = 1;
    std::uint64_t path = 0;
};

Method parse_method(const std::string& s) {
    if (s == "ssav") {
        return Method::Ssav;
    }
    if (s == "em") {
        return Method::EulerMaruyama;
    }
    throw UsageError("--method must be ssav or em");
}

int cmd_simulate(const Common& c, const SimulateOpts& o) {
    const RunConfig cfg = load_config(c.config_path);
    const ModelSpec& model = cfg.model;
    Run run("simulate", c, cfg);
    EnsembleSpec spec;
    spec.model = model;
    spec.h = parse_step(o.h);
    spec.horizon = parse_step(o.horizon);
    const long n_steps = spec.n_steps();
    const Method method = parse_method(o.method);

    std::unique_ptr<StationarySampler> sampler;
    if (cfg.init.kind == InitLaw::Kind::Stationary) {
        sampler = std::make_unique<StationarySampler>(model);
    }
    const AugmentedState init = draw_initial(model, cfg.init, c.seed, o.path, sampler.get());
    NoisePlan plan(c.seed, o.path, model.gamma, model.dim, spec.h, n_steps);
    CoupledNoise noise(model, plan, 1);
    const auto rec = run_trajectory(model, init, spec.h, n_steps, noise, o.record_every, method);

    const auto path = run.file("trajectory.csv");
    std::ofstream out(path);
    out << "t";
    for (int i = 1; i <= model.dim; ++i) {
        out << ",v" << i;
    }
    for (int i = 1; i <= model.dim; ++i) {
        out << ",u" << i;
    }
    out << ",rho,energy\n";
    for (std::size_t r = 0; r < rec.times.size(); ++r) {
        const auto& s = rec.states[r];
        out << format_number(rec.times[r]);
        for (int i = 0; i < model.dim; ++i) {
            out << ',' << format_number(s.v[i]);
        }
        for (int i = 0; i < model.dim; ++i) {
            out << ',' << format_number(s.u[i]);
        }
        out << ',' << format_number(s.rho) << ',' << format_number(rec.energies[r]) << '\n';
    }
    run.manifest.verdicts["first_failure"] =
        rec.first_failure ? json(*rec.first_failure) : json(nullptr);
    std::cout << "steps " << n_steps << ", recorded " << rec.times.size() << " states";
    if (rec.first_failure) {
        std::cout << ", non-finite from step " << *rec.first_failure;
    }
    std::cout << '\n';
    run.finish();
    return kExitPass;
}

// ---------------------------------------------------------------------------

struct StudyOpts {
    std::string kind;
    std::optional<long> paths;
    std::string k_range = "6..11";
    int k_ref = 14;
    std::optional<std::string> h;
    std::optional<std::string> horizon;
    std::vector<int> p_list{1, 2};
    std::optional<double> delta;
    std::optional<double> lambda;
};

json verdict_json(const std::string& status, const std::string& detail) {
    return {{"status", status}, {"detail", detail}};
}

int convergence_study(const Common& c, const StudyOpts& o, const RunConfig& cfg, Run& run) {
    StudyConfig sc;
    sc.model = cfg.model;
    sc.horizon = o.horizon ? parse_step(*o.horizon) : 1.0;
    sc.k_range = parse_k_range(o.k_range);
    sc.k_ref = o.k_ref;
    sc.n_paths = o.paths.value_or(1000);
    sc.seed = c.seed;
    sc.init = cfg.init;
    sc.threads = c.threads;
    sc.validate();

    const auto ends = run_coupled_endpoints(sc);
    std::vector<StudyResult> results;
    double lo = 0.85, hi = 1.15;
    if (o.kind == "strong") {
        results.push_back(strong_error_from(sc, ends));
    } else if (o.kind == "energy") {
        results.push_back(energy_error_from(sc, ends));
    } else {
        results = weak_error_from(sc, ends);
        lo = 0.7;
        hi = 1.3;
    }

    int code = kExitPass;
    json sidecar{{"kind", o.kind}, {"config", cfg.snapshot}, {"seed", c.seed},
                 {"version", version_string()}, {"results", json::array()}};
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const std::string stem = results.size() == 1 ? o.kind : o.kind + "_" + std::to_string(i + 1);
        write_convergence_csv(run.file(stem + ".csv"), r);
        json entry = to_json(r);
        std::cout << r.name << '\n';
        for (const auto& row : r.rows) {
            std::cout << "  k=" << row.k << "  h=" << fmt(row.h) << "  error=" << fmt(row.error)
                      << "  se=" << fmt(row.std_error) << '\n';
        }
        json verdict;
        // The verdict applies to the first result (φ₁ for the weak study).
        const bool gated = i == 0;
        if (r.rows.size() < 4) {
            verdict = verdict_json("none", "too few step sizes for a verdict");
        } else if (!r.fit) {
            verdict = verdict_json(gated ? "fail" : "info", "no fit: " + r.fit_note);
            if (gated) {
                code = kExitFail;
            }
        } else {
            const bool pass = r.fit->slope >= lo && r.fit->slope <= hi;
            verdict = verdict_json(gated ? (pass ? "pass" : "fail") : "info",
                                   "slope " + fmt(r.fit->slope) + " window [" + fmt(lo) + ", " +
                                       fmt(hi) + "]");
            if (gated && !pass) {
                code = kExitFail;
            }
        }
        if (r.fit) {
            std::cout << "  slope " << fmt(r.fit->slope) << " +/- " << fmt(r.fit->std_error);
        } else {
            std::cout << "  no slope (" << r.fit_note << ")";
        }
        std::cout << "  verdict: " << verdict["status"].get<std::string>() << '\n';
        entry["verdict"] = verdict;
        run.manifest.verdicts[r.name] = verdict;
        sidecar["results"].push_back(entry);
    }
    write_json(run.file(o.kind + ".json"), sidecar);
    return code;
}

EnsembleSpec ensemble_from(const Common& c, const StudyOpts& o, const RunConfig& cfg,
                           const char* default_h, const char* default_t, long default_paths,
                           double record_dt) {
    EnsembleSpec spec;
    spec.model = cfg.model;
    spec.h = parse_step(o.h.value_or(default_h));
    spec.horizon = parse_step(o.horizon.value_or(default_t));
    spec.n_paths = o.paths.value_or(default_paths);
    spec.seed = c.seed;
    spec.init = cfg.init;
    spec.threads = c.threads;
    spec.record_every = std::max(1L, std::lround(record_dt / spec.h));
    return spec;
}

int evolution_output(Run& run, const std::string& stem, const std::vector<EvolutionRow>& rows,
                     const json& extra, const json& verdict, const RunConfig& cfg,
                     std::uint64_t seed) {
    write_evolution_csv(run.file(stem + ".csv"), rows);
    json sidecar = extra;
    sidecar["config"] = cfg.snapshot;
    sidecar["seed"] = seed;
    sidecar["version"] = version_string();
    sidecar["verdict"] = verdict;
    write_json(run.file(stem + ".json"), sidecar);
    run.manifest.verdicts[stem] = verdict;
    std::cout << stem << ": " << verdict["status"].get<std::string>() << " ("
              << verdict["detail"].get<std::string>() << ")\n";
    return verdict["status"] == "fail" ? kExitFail : kExitPass;
}

int cmd_study(const Common& c, const StudyOpts& o) {
    static const std::vector<std::string> kinds{"strong",  "weak",    "energy", "energy-evolution",
                                                "longtime", "moments", "expint"};
    if (std::find(kinds.begin(), kinds.end(), o.kind) == kinds.end()) {
        throw UsageError("unknown study kind '" + o.kind + "'");
    }
    const RunConfig cfg = load_config(c.config_path);
    Run run("study " + o.kind, c, cfg);
    int code = kExitPass;

    if (o.kind == "strong" || o.kind == "weak" || o.kind == "energy") {
        code = convergence_study(c, o, cfg, run);
    } else if (o.kind == "energy-evolution") {
        const auto spec = ensemble_from(c, o, cfg, "2^-6", "10", 5000, 0.0625);
        const auto st = energy_evolution_study(spec);
        code = evolution_output(
            run, "energy_evolution", st.rows, {{"initial_energy", st.initial_energy}},
            verdict_json(st.any_flag ? "fail" : "pass",
                         st.any_flag ? "mean energy exceeds the linear bound by > 4 SE"
                                     : "mean energy within the linear bound + 4 SE"),
            cfg, c.seed);
    } else if (o.kind == "longtime") {
        const auto spec = ensemble_from(c, o, cfg, "2^-9", "30", 5000, 0.0625);
        const auto fns = longtime_test_functions();
        const auto curves = longtime_weak_study(spec, fns);
        for (std::size_t j = 0; j < curves.size(); ++j) {
            const auto& cv = curves[j];
            const auto& last = cv.rows.back();
            const bool pass = last.value <= last.bound;
            const int rc = evolution_output(
                run, "longtime_" + std::to_string(j + 1), cv.rows,
                {{"test_function", cv.name}, {"reference", cv.reference}},
                verdict_json(pass ? "pass" : "fail",
                             cv.name + ": error " + fmt(last.value) + " at t=" + fmt(last.t) +
                                 ", bound " + fmt(last.bound)),
                cfg, c.seed);
            code = std::max(code, rc);
        }
    } else if (o.kind == "moments") {
        const auto spec = ensemble_from(c, o, cfg, "2^-6", "50", 2000, 0.25);
        const auto studies = moment_growth_study(spec, o.p_list);
        for (const auto& ms : studies) {
            bool pass = true;
            std::string detail;
            if (ms.growth) {
                pass = ms.growth->slope <= ms.p + 0.3;
                detail = "growth exponent " + fmt(ms.growth->slope) + " (limit " +
                         fmt(ms.p + 0.3) + ")";
            } else {
                detail = "no growth fit: " + ms.growth_note;
            }
            if (ms.p == 1) {
                pass = pass && ms.linear_bound_ok;
                detail += ms.linear_bound_ok ? ", linear bound holds" : ", linear bound exceeded";
            }
            json extra{{"p", ms.p}};
            if (ms.growth) {
                extra["growth"] = to_json(*ms.growth);
            }
            const int rc = evolution_output(run, "moments_p" + std::to_string(ms.p), ms.rows,
                                            extra, verdict_json(pass ? "pass" : "fail", detail),
                                            cfg, c.seed);
            code = std::max(code, rc);
        }
    } else {
        const auto spec = ensemble_from(c, o, cfg, "2^-6", "5", 10000, 0.0625);
        std::unique_ptr<StationarySampler> sampler;
        if (cfg.init.kind == InitLaw::Kind::Stationary) {
            sampler = std::make_unique<StationarySampler>(spec.model);
        }
        const AugmentedState init = draw_initial(spec.model, cfg.init, c.seed, 0, sampler.get());
        const double e0 = modified_energy(spec.model, init);
        const double delta = o.delta.value_or(std::min(1e-3, 20.0 / e0));
        const double lambda = o.lambda.value_or(delta * spec.model.noise_norm_sq());
        const auto probe = exp_integrability_probe(spec, delta, lambda);
        code = evolution_output(
            run, "expint", probe.rows,
            {{"delta", delta}, {"lambda", lambda}, {"overflow_paths", probe.overflow_paths}},
            verdict_json(probe.below_bound ? "pass" : "fail",
                         probe.below_bound ? "mean stays below bound + 4 SE"
                                           : "mean exceeds bound + 4 SE (heavy-tailed estimator)"),
            cfg, c.seed);
    }
    run.finish();
    return code;
}

// ---------------------------------------------------------------------------

struct SampleOpts {
    std::string method = "ssav";
    std::string horizon = "500";
    std::string h = "2^-7";
    long paths = 5000;
    int bins = 100;
};

int cmd_sample(const Common& c, const SampleOpts& o) {
    const RunConfig cfg = load_config(c.config_path);
    Run run("sample", c, cfg);
    EnsembleSpec spec;
    spec.model = cfg.model;
    spec.h = parse_step(o.h);
    spec.horizon = parse_step(o.horizon);
    spec.n_paths = o.paths;
    spec.seed = c.seed;
    spec.init = cfg.init;
    spec.method = parse_method(o.method);
    spec.threads = c.threads;
    const auto res = density_study(spec, o.bins);

    write_samples_csv(run.file("samples.csv"), res);
    for (std::size_t i = 0; i < res.histograms.size(); ++i) {
        write_histogram_csv(run.file("histogram_u" + std::to_string(i + 1) + ".csv"),
                            res.histograms[i], res.reference_bin_density[i]);
    }
    json ks = json::array();
    for (double k : res.ks) {
        ks.push_back(k);
    }
    json summary{{"method", o.method},
                 {"h", spec.h},
                 {"T", spec.horizon},
                 {"paths", spec.n_paths},
                 {"seed", c.seed},
                 {"nan_count", res.nan_count},
                 {"assumption_violations", res.assumption_violations},
                 {"ks", ks},
                 {"config", cfg.snapshot},
                 {"version", version_string()}};
    write_json(run.file("sample.json"), summary);

    std::cout << "method " << o.method << ", paths " << spec.n_paths << ", diverged "
              << res.nan_count << ", assumption violations " << res.assumption_violations << '\n';
    for (std::size_t i = 0; i < res.ks.size(); ++i) {
        std::cout << "KS(u" << i + 1 << ") = " << fmt(res.ks[i]) << '\n';
    }
    run.manifest.verdicts["sample"] = {{"nan_count", res.nan_count},
                                       {"assumption_violations", res.assumption_violations},
                                       {"ks", ks}};
    run.finish();
    if (spec.method == Method::Ssav && res.assumption_violations > 0) {
        std::cerr << "assumption violated on " << res.assumption_violations << " path(s)\n";
        return kExitRuntime;
    }
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Splitting SAV integrator for kinetic Langevin dynamics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version_string()));
    // "-h" would collide with the --h stepsize option.
    app.set_help_flag("--help", "Print this help message and exit");

    Common common;
    auto add_common = [&](CLI::App* sub, const std::string& default_out) {
        sub->add_option("--config", common.config_path, "Model config (JSON)")->required();
        sub->add_option("--out", common.out_dir, "Output directory (default " + default_out + ")");
        sub->add_option("--seed", common.seed, "Root seed");
        sub->add_option("--threads", common.threads, "Worker threads (default: $SSAV_THREADS)");
    };

    auto* check = app.add_subcommand("check", "Validate a model config");
    add_common(check, "runs/check");

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate one trajectory");
    add_common(simulate, "runs/simulate");
    simulate->add_option("--h", sim.h, "Stepsize (e.g. 2^-6)");
    simulate->add_option("--T", sim.horizon, "Horizon");
    simulate->add_option("--method", sim.method, "ssav or em");
    simulate->add_option("--record-every", sim.record_every, "Record every n-th step");
    simulate->add_option("--path", sim.path, "Path index within the seed");

    StudyOpts study;
    auto* study_cmd = app.add_subcommand("study", "Run a convergence or ensemble study");
    study_cmd->add_option("kind", study.kind,
                          "strong|weak|energy|energy-evolution|longtime|moments|expint")
        ->required();
    add_common(study_cmd, "runs/study");
    study_cmd->add_option("--paths", study.paths, "Monte Carlo paths");
    study_cmd->add_option("--k-range", study.k_range, "Coarse levels a..b (h = T/2^k)");
    study_cmd->add_option("--k-ref", study.k_ref, "Reference level");
    study_cmd->add_option("--h", study.h, "Stepsize for ensemble studies");
    study_cmd->add_option("--T", study.horizon, "Horizon");
    study_cmd->add_option("--p", study.p_list, "Moment orders (moments)");
    study_cmd->add_option("--delta", study.delta, "delta (expint)");
    study_cmd->add_option("--lambda", study.lambda, "lambda (expint)");

    SampleOpts sample;
    auto* sample_cmd = app.add_subcommand("sample", "Endpoint samples and density diagnostics");
    add_common(sample_cmd, "runs/sample");
    sample_cmd->add_option("--method", sample.method, "ssav or em");
    sample_cmd->add_option("--T", sample.horizon, "Horizon");
    sample_cmd->add_option("--h", sample.h, "Stepsize");
    sample_cmd->add_option("--paths", sample.paths, "Number of paths");
    sample_cmd->add_option("--bins", sample.bins, "Histogram bins");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitUsage;
    }

    const bool is_check = check->parsed();
    if (common.out_dir.empty()) {
        common.out_dir = "runs/" + app.get_subcommands().front()->get_name();
    }
    try {
        if (is_check) {
            return cmd_check(common);
        }
        if (simulate->parsed()) {
            return cmd_simulate(common, sim);
        }
        if (study_cmd->parsed()) {
            return cmd_study(common, study);
        }
        return cmd_sample(common, sample);
    } catch (const ConfigSyntaxError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return is_check ? kExitFail : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return kExitUsage;
    } catch (const AssumptionViolation& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
