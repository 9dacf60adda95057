#include "ssav/config.hpp"

#include <fstream>
#include <sstream>

namespace ssav {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ConfigSyntaxError(std::string("missing key '") + key + "'");
    }
    return obj.at(key);
}

double number(const json& obj, const char* key) {
    const json& x = require(obj, key);
    if (!x.is_number()) {
        throw ConfigSyntaxError(std::string("key '") + key + "' must be a number");
    }
    return x.get<double>();
}

double number_or(const json& obj, const char* key, double fallback) {
    return obj.is_object() && obj.contains(key) ? number(obj, key) : fallback;
}

Vector vector_of(const json& x, int dim, const char* key) {
    if (!x.is_array() || static_cast<int>(x.size()) != dim) {
        throw ConfigSyntaxError(std::string("key '") + key + "' must be an array of " +
                                std::to_string(dim) + " numbers");
    }
    Vector out(dim);
    for (int i = 0; i < dim; ++i) {
        if (!x[static_cast<std::size_t>(i)].is_number()) {
            throw ConfigSyntaxError(std::string("key '") + key + "' must hold numbers");
        }
        out[i] = x[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
}

Matrix noise_of(const json& x, int dim) {
    if (x.is_number()) {
        return x.get<double>() * Matrix::Identity(dim, dim);
    }
    if (!x.is_array() || static_cast<int>(x.size()) != dim) {
        throw ConfigSyntaxError("noise_matrix must be a number or a dim x dim array");
    }
    Matrix g(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const json& row = x[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            throw ConfigSyntaxError("noise_matrix row " + std::to_string(r) + " must have " +
                                    std::to_string(dim) + " entries");
        }
        for (int c = 0; c < dim; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number()) {
                throw ConfigSyntaxError("noise_matrix entries must be numbers");
            }
            g(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return g;
}

}  // namespace

RunConfig parse_config(const std::string& text, bool validate) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigSyntaxError(std::string("malformed config: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigSyntaxError("config must be a JSON object");
    }
    const json& dim_json = require(doc, "dim");
    if (!dim_json.is_number_integer()) {
        throw ConfigSyntaxError("key 'dim' must be an integer");
    }
    const int dim = dim_json.get<int>();
    if (dim < 1) {
        throw ConfigError("dim must be a positive integer");
    }

    ModelSpec model;
    model.dim = dim;
    model.kappa = number(doc, "kappa");
    model.gamma = number(doc, "gamma");
    model.noise_matrix = noise_of(require(doc, "noise_matrix"), dim);
    model.alpha = number(doc, "alpha");
    model.c_h = number(doc, "c_h");

    const json& pot = require(doc, "potential");
    const json& name_json = require(pot, "name");
    if (!name_json.is_string()) {
        throw ConfigSyntaxError("potential.name must be a string");
    }
    const std::string name = name_json.get<std::string>();
    const json params = pot.contains("params") ? pot.at("params") : json::object();
    if (!params.is_object()) {
        throw ConfigSyntaxError("potential.params must be an object");
    }
    if (name == "gaussian_mixture") {
        if (dim != 1) {
            throw ConfigError("gaussian_mixture is one-dimensional");
        }
        auto pd = builtin_gaussian_mixture(number_or(params, "iota", 1.0),
                                           number_or(params, "sigma", 0.5), model.kappa);
        model.potential = std::make_shared<const Potential>(std::move(pd.potential));
        model.density = std::make_shared<const AnalyticDensity>(std::move(pd.density));
    } else if (name == "double_well") {
        auto pd = builtin_double_well(dim, model.kappa);
        model.potential = std::make_shared<const Potential>(std::move(pd.potential));
        model.density = std::make_shared<const AnalyticDensity>(std::move(pd.density));
    } else if (name == "bimodal") {
        if (dim != 2) {
            throw ConfigError("bimodal is two-dimensional");
        }
        model.potential = std::make_shared<const Potential>(builtin_bimodal());
        model.density = std::make_shared<const AnalyticDensity>(bimodal_density(model.kappa));
    } else if (name == "linear") {
        model.potential =
            std::make_shared<const Potential>(linear_potential(vector_of(require(params, "c"), dim, "c")));
    } else {
        throw ConfigSyntaxError("unknown potential '" + name + "'");
    }

    RunConfig cfg;
    cfg.init = InitLaw::unit_point(dim);
    if (doc.contains("init")) {
        const json& init = doc.at("init");
        const json& kind_json = require(init, "kind");
        const std::string kind = kind_json.is_string() ? kind_json.get<std::string>() : "";
        if (kind == "point" || kind == "gaussian") {
            if (init.contains("v0")) {
                cfg.init.v0 = vector_of(init.at("v0"), dim, "v0");
            }
            if (init.contains("u0")) {
                cfg.init.u0 = vector_of(init.at("u0"), dim, "u0");
            }
            if (kind == "gaussian") {
                cfg.init.kind = InitLaw::Kind::Gaussian;
                cfg.init.spread = number(init, "spread");
            }
        } else if (kind == "stationary") {
            cfg.init = InitLaw::stationary();
        } else {
            throw ConfigSyntaxError("init.kind must be point, gaussian or stationary");
        }
    }

    if (validate) {
        model.validate();
    }
    cfg.model = std::move(model);
    cfg.snapshot = std::move(doc);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, bool validate) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigSyntaxError("cannot read config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), validate);
}

}  // namespace ssav
