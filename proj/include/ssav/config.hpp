#pragma once

#include "ssav/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace ssav {

/// The file is not valid JSON or does not have the expected shape. The message
/// carries the parse location or the offending key.
class ConfigSyntaxError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct RunConfig {
    ModelSpec model;
    InitLaw init;
    nlohmann::json snapshot;
};

/// Keys: dim, kappa, gamma, noise_matrix (number c for c·I, or a dim×dim array
/// of rows), alpha, c_h, potential.name, potential.params, and optionally
/// init.kind ∈ {point, gaussian, stationary} with v0, u0, spread.
///
/// Potentials: gaussian_mixture {iota, sigma}, double_well, bimodal (dim 2),
/// linear {c}. With `validate` false the model fields are range-checked by the
/// caller instead.
RunConfig parse_config(const std::string& text, bool validate = true);
RunConfig load_config(const std::filesystem::path& path, bool validate = true);

}  // namespace ssav
