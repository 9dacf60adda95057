#pragma once

#include "ssav/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ssav {

/// Code version stamped at configure time (git describe), or "unknown".
const char* version_string();

/// Shortest round-trip decimal (%.17g); "nan"/"inf" for non-finite values.
std::string format_number(double x);

// CSV writers. Columns:
//   convergence: k,h,error,stderr
//   evolution:   t,value,bound,stderr
//   histogram:   bin_left,bin_right,count,reference_density
//   samples:     path_index,v1..vm,u1..um,rho,diverged_flag
void write_convergence_csv(const std::filesystem::path& path, const StudyResult& result);
void write_evolution_csv(const std::filesystem::path& path, const std::vector<EvolutionRow>& rows);
void write_histogram_csv(const std::filesystem::path& path, const stats::Histogram& hist,
                         const std::vector<double>& reference_density);
void write_samples_csv(const std::filesystem::path& path, const DensityResult& result);

nlohmann::json to_json(const StudyResult& result);
nlohmann::json to_json(const stats::SlopeFit& fit);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// Record of one CLI invocation.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string version = version_string();
    std::string started_at;
    double wall_clock_seconds = 0.0;
    std::vector<std::string> outputs;
    nlohmann::json verdicts = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// UTC timestamp, ISO 8601.
std::string utc_now();

}  // namespace ssav
