#include "fixtures.hpp"
#include "ssav/config.hpp"
#include "ssav/output.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ssav;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "ssav_unit_output";
    fs::create_directories(dir);
    return dir;
}

const char* kDoubleWell = R"({
  "dim": 2, "kappa": 1.0, "gamma": 1.0, "noise_matrix": 1.4142135623730951,
  "alpha": 1.0, "c_h": 1000.0, "potential": {"name": "double_well"}
})";

}  // namespace

TEST_CASE("parse a scalar-noise config") {
    const RunConfig cfg = parse_config(kDoubleWell);
    CHECK(cfg.model.dim == 2);
    CHECK(cfg.model.noise_matrix(0, 0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(cfg.model.noise_matrix(0, 1) == 0.0);
    CHECK(cfg.model.c_h == 1000.0);
    CHECK(cfg.init.kind == InitLaw::Kind::Point);
    CHECK(cfg.init.u0.norm() == doctest::Approx(1.0));
    CHECK(cfg.snapshot.at("potential").at("name") == "double_well");
    CHECK(cfg.model.density_applies());
}

TEST_CASE("parse a matrix-noise config with params and init") {
    const RunConfig cfg = parse_config(R"({
      "dim": 1, "kappa": 2, "gamma": 1, "noise_matrix": [[2.0]], "alpha": 1, "c_h": 1000,
      "potential": {"name": "gaussian_mixture", "params": {"iota": 1, "sigma": 0.5}},
      "init": {"kind": "gaussian", "v0": [0.5], "u0": [1.5], "spread": 0.2}
    })");
    CHECK(cfg.model.noise_matrix(0, 0) == 2.0);
    CHECK(cfg.init.kind == InitLaw::Kind::Gaussian);
    CHECK(cfg.init.u0[0] == 1.5);
    CHECK(cfg.init.spread == 0.2);
    CHECK(cfg.model.potential->value(fixtures::vec({1.0})) ==
          doctest::Approx(fixtures::gaussian_mixture().potential->value(fixtures::vec({1.0}))));
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("{ \"dim\": 1, "), ConfigSyntaxError);
    CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigSyntaxError);
    CHECK_THROWS_AS(parse_config(R"({"dim": 1})"), ConfigSyntaxError);
    std::string unknown = kDoubleWell;
    unknown.replace(unknown.find("double_well"), 11, "triple_well");
    CHECK_THROWS_AS(parse_config(unknown), ConfigSyntaxError);
    std::string bad_noise = kDoubleWell;
    bad_noise.replace(bad_noise.find("1.4142135623730951"), 18, "[[1, 0]]");
    CHECK_THROWS_AS(parse_config(bad_noise), ConfigSyntaxError);

    try {
        parse_config("{\n  \"dim\": 1,\n  oops\n}");
        FAIL("expected a syntax error");
    } catch (const ConfigSyntaxError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    std::string no_floor = kDoubleWell;
    no_floor.replace(no_floor.find("1000.0"), 6, "0.0");
    CHECK_THROWS_AS(parse_config(no_floor), ConfigError);
    CHECK_NOTHROW(parse_config(no_floor, false));
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigSyntaxError);
}

TEST_CASE("shipped configs load") {
    const fs::path dir = fs::path(SSAV_ORACLE_FILE).parent_path().parent_path().parent_path() / "configs";
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        CHECK_NOTHROW(load_config(entry.path()));
        ++seen;
    }
    CHECK(seen >= 5);
}

TEST_CASE("number formatting round-trips") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("csv writers") {
    const fs::path dir = scratch_dir();

    StudyResult res;
    res.rows = {{6, 1.0 / 64, 0.5, 0.01}, {7, 1.0 / 128, 0.25, 0.005}};
    write_convergence_csv(dir / "conv.csv", res);
    CHECK(slurp(dir / "conv.csv") ==
          "k,h,error,stderr\n6,0.015625,0.5,0.01\n7,0.0078125,0.25,0.0050000000000000001\n");

    write_evolution_csv(dir / "evo.csv", {{0.0, 1.0, 2.0, 0.0, false}});
    CHECK(slurp(dir / "evo.csv") == "t,value,bound,stderr\n0,1,2,0\n");

    stats::Histogram hist(0.0, 1.0, 2);
    hist.add(0.25);
    write_histogram_csv(dir / "hist.csv", hist, {1.5, 0.5});
    CHECK(slurp(dir / "hist.csv") ==
          "bin_left,bin_right,count,reference_density\n0,0.5,1,1.5\n0.5,1,0,0.5\n");

    DensityResult d;
    AugmentedState s;
    s.v = fixtures::vec({1.0});
    s.u = fixtures::vec({2.0});
    s.rho = 3.0;
    d.endpoints = {s};
    d.diverged = {false};
    write_samples_csv(dir / "samples.csv", d);
    CHECK(slurp(dir / "samples.csv") == "path_index,v1,u1,rho,diverged_flag\n0,1,2,3,0\n");
}

TEST_CASE("json sidecars and manifest") {
    StudyResult res;
    res.name = "strong";
    res.rows = {{6, 0.5, 0.1, 0.0}};
    res.fit_note = "too few rows";
    const auto doc = to_json(res);
    CHECK(doc.at("fit").is_null());
    CHECK(doc.at("fit_note") == "too few rows");
    CHECK(doc.at("rows").size() == 1);

    RunManifest manifest;
    manifest.command = "check";
    manifest.seed = 7;
    manifest.started_at = utc_now();
    manifest.outputs = {"manifest.json"};
    const auto m = manifest.to_json();
    for (const char* key : {"command", "config", "seed", "version", "started_at",
                            "wall_clock_seconds", "outputs", "verdicts"}) {
        CHECK(m.contains(key));
    }
    CHECK(m.at("started_at").get<std::string>().size() == 20);
    CHECK(std::string(version_string()).size() > 0);
}
