#include "ssav/output.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#ifndef SSAV_VERSION
#define SSAV_VERSION "unknown"
#endif

namespace ssav {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

// JSON has no NaN; non-finite numbers become null.
nlohmann::json num(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

const char* version_string() { return SSAV_VERSION; }

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_convergence_csv(const std::filesystem::path& path, const StudyResult& result) {
    auto out = open_out(path);
    out << "k,h,error,stderr\n";
    for (const auto& r : result.rows) {
        out << r.k << ',' << format_number(r.h) << ',' << format_number(r.error) << ','
            << format_number(r.std_error) << '\n';
    }
}

void write_evolution_csv(const std::filesystem::path& path, const std::vector<EvolutionRow>& rows) {
    auto out = open_out(path);
    out << "t,value,bound,stderr\n";
    for (const auto& r : rows) {
        out << format_number(r.t) << ',' << format_number(r.value) << ','
            << format_number(r.bound) << ',' << format_number(r.std_error) << '\n';
    }
}

void write_histogram_csv(const std::filesystem::path& path, const stats::Histogram& hist,
                         const std::vector<double>& reference_density) {
    auto out = open_out(path);
    out << "bin_left,bin_right,count,reference_density\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        out << format_number(hist.bin_left(b)) << ',' << format_number(hist.bin_right(b)) << ','
            << hist.counts[b] << ','
            << (b < reference_density.size() ? format_number(reference_density[b]) : "nan")
            << '\n';
    }
}

void write_samples_csv(const std::filesystem::path& path, const DensityResult& result) {
    auto out = open_out(path);
    const int m = result.endpoints.empty() ? 0 : result.endpoints.front().dim();
    out << "path_index";
    for (int i = 1; i <= m; ++i) {
        out << ",v" << i;
    }
    for (int i = 1; i <= m; ++i) {
        out << ",u" << i;
    }
    out << ",rho,diverged_flag\n";
    for (std::size_t p = 0; p < result.endpoints.size(); ++p) {
        const auto& s = result.endpoints[p];
        out << p;
        for (int i = 0; i < m; ++i) {
            out << ',' << format_number(s.v[i]);
        }
        for (int i = 0; i < m; ++i) {
            out << ',' << format_number(s.u[i]);
        }
        out << ',' << format_number(s.rho) << ',' << (result.diverged[p] ? 1 : 0) << '\n';
    }
}

nlohmann::json to_json(const stats::SlopeFit& fit) {
    return {{"slope", num(fit.slope)},
            {"slope_stderr", num(fit.std_error)},
            {"intercept", num(fit.intercept)},
            {"rows_used", fit.used},
            {"rows_excluded", fit.excluded}};
}

nlohmann::json to_json(const StudyResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"k", r.k}, {"h", num(r.h)}, {"error", num(r.error)},
                        {"stderr", num(r.std_error)}});
    }
    nlohmann::json doc{{"name", result.name},
                       {"seed", result.seed},
                       {"n_paths", result.n_paths},
                       {"excluded_paths", result.excluded_paths},
                       {"seconds", result.seconds},
                       {"rows", rows}};
    if (result.fit) {
        doc["fit"] = to_json(*result.fit);
    } else {
        doc["fit"] = nullptr;
        doc["fit_note"] = result.fit_note;
    }
    return doc;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
}

nlohmann::json RunManifest::to_json() const {
    return {{"command", command},     {"config", config},
            {"seed", seed},           {"version", version},
            {"started_at", started_at}, {"wall_clock_seconds", wall_clock_seconds},
            {"outputs", outputs},     {"verdicts", verdicts}};
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace ssav
