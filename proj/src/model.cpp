#include "ssav/model.hpp"

#include "ssav/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace ssav {

AssumptionViolation::AssumptionViolation(Vector point, double radicand, long step)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "kappa*Phi(u) + C_H - alpha*|u|^2 = " << radicand << " < 1 at u = "
             << format_vector(point);
          if (step >= 0) {
              os << " (step " << step << ")";
          }
          os << "; increase C_H or decrease alpha";
          return os.str();
      }()),
      point_(std::move(point)),
      radicand_(radicand),
      step_(step) {}

std::string format_vector(const Vector& x) {
    std::ostringstream os;
    os.precision(10);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        os << (i ? ", " : "") << x[i];
    }
    os << ')';
    return os.str();
}

Vector Potential::gradient(const Vector& u) const {
    Vector g(u.size());
    gradient_into(u, g);
    return g;
}

double AnalyticDensity::density_u(const Vector& u) const {
    if (!normalizer_u) {
        throw std::logic_error("density has no normalizer in this dimension");
    }
    return marginal_u(u) / *normalizer_u;
}

void ModelSpec::validate() const {
    if (dim < 1) {
        throw ConfigError("dim must be a positive integer");
    }
    if (!(kappa > 0.0) || !(gamma > 0.0) || !(alpha > 0.0) || !(c_h > 0.0)) {
        throw ConfigError("kappa, gamma, alpha and c_h must all be positive");
    }
    if (noise_matrix.rows() != dim || noise_matrix.cols() != dim) {
        throw ConfigError("noise_matrix must be dim x dim");
    }
    if (!noise_matrix.allFinite()) {
        throw ConfigError("noise_matrix has non-finite entries");
    }
    if (!potential || !potential->value || !potential->gradient_into) {
        throw ConfigError("model has no potential");
    }
}

void ModelSpec::apply_noise(const Vector& raw, Vector& out) const {
    out.noalias() = noise_matrix * raw;
}

bool ModelSpec::density_applies() const {
    if (!density) {
        return false;
    }
    const Matrix expected = std::sqrt(2.0 * kappa * gamma) * Matrix::Identity(dim, dim);
    return (noise_matrix - expected).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + expected(0, 0));
}

ModelSpec make_model(int dim, double kappa, double gamma, Matrix noise_matrix, double alpha,
                     double c_h, std::shared_ptr<const Potential> potential,
                     std::shared_ptr<const AnalyticDensity> density) {
    ModelSpec m;
    m.dim = dim;
    m.kappa = kappa;
    m.gamma = gamma;
    m.noise_matrix = std::move(noise_matrix);
    m.alpha = alpha;
    m.c_h = c_h;
    m.potential = std::move(potential);
    m.density = std::move(density);
    m.validate();
    return m;
}

ModelSpec make_model(int dim, double kappa, double gamma, double noise_scale, double alpha,
                     double c_h, PotentialWithDensity pd) {
    return make_model(dim, kappa, gamma, noise_scale * Matrix::Identity(dim, dim), alpha, c_h,
                      std::make_shared<const Potential>(std::move(pd.potential)),
                      std::make_shared<const AnalyticDensity>(std::move(pd.density)));
}

namespace {

std::function<double(const Vector&)> gaussian_v_marginal(double kappa) {
    return [kappa](const Vector& v) {
        const double m = static_cast<double>(v.size());
        return std::exp(-v.squaredNorm() / (2.0 * kappa)) /
               std::pow(2.0 * std::numbers::pi * kappa, 0.5 * m);
    };
}

}  // namespace

PotentialWithDensity builtin_gaussian_mixture(double iota, double sigma, double kappa) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("gaussian mixture needs sigma > 0");
    }
    const double s2 = sigma * sigma;
    Potential p;
    p.label = "gaussian_mixture";
    p.value = [iota, s2](const Vector& u) {
        const double x = u[0];
        // log(1/3 + (2/3) e^a) without overflow for large a.
        const double a = -2.0 * x * iota / s2;
        const double log_mix = a > 0.0 ? a + std::log(2.0 / 3.0 + std::exp(-a) / 3.0)
                                       : std::log(1.0 / 3.0 + 2.0 / 3.0 * std::exp(a));
        return (x - iota) * (x - iota) / (2.0 * s2) - log_mix;
    };
    p.gradient_into = [iota, s2](const Vector& u, Vector& g) {
        const double x = u[0];
        g.resize(1);
        g[0] = (x - iota) / s2 + (4.0 * iota / s2) / (std::exp(2.0 * iota * x / s2) + 2.0);
    };

    AnalyticDensity d;
    d.marginal_v = gaussian_v_marginal(kappa);
    d.marginal_u = [iota, s2](const Vector& u) {
        const double x = u[0];
        return (std::exp(-(x - iota) * (x - iota) / (2.0 * s2)) / 3.0 +
                2.0 * std::exp(-(x + iota) * (x + iota) / (2.0 * s2)) / 3.0) /
               std::sqrt(2.0 * std::numbers::pi * s2);
    };
    d.normalizer_u = 1.0;
    const double reach = std::abs(iota) + 12.0 * sigma;
    d.box_lo = -reach;
    d.box_hi = reach;
    return {std::move(p), std::move(d)};
}

PotentialWithDensity builtin_double_well(int dim, double kappa) {
    if (dim < 1) {
        throw std::invalid_argument("double well needs dim >= 1");
    }
    Potential p;
    p.label = "double_well";
    p.value = [](const Vector& u) {
        const double r2 = u.squaredNorm();
        return 0.25 * r2 * r2 - 0.5 * r2;
    };
    p.gradient_into = [](const Vector& u, Vector& g) {
        g = (u.squaredNorm() - 1.0) * u;
    };

    AnalyticDensity d;
    d.marginal_v = gaussian_v_marginal(kappa);
    d.marginal_u = [](const Vector& u) {
        const double r2 = u.squaredNorm();
        return std::exp(-(0.25 * r2 * r2 - 0.5 * r2));
    };
    auto radial = [](double r) { return std::exp(-(0.25 * r * r * r * r - 0.5 * r * r)); };
    if (dim == 1) {
        d.normalizer_u = quad::integrate(radial, {-12.0, -1.0, 0.0, 1.0, 12.0});
    } else if (dim == 2) {
        d.normalizer_u = 2.0 * std::numbers::pi *
                         quad::integrate([&](double r) { return r * radial(r); }, {0.0, 1.0, 12.0});
    }
    d.box_lo = -5.0;
    d.box_hi = 5.0;
    return {std::move(p), std::move(d)};
}

namespace {

double bimodal_value(double a, double b) {
    return 0.5 * (a * a * b * b + a * a + b * b - 8.0 * (a + b));
}

}  // namespace

Potential builtin_bimodal() {
    Potential p;
    p.label = "bimodal";
    p.value = [](const Vector& u) { return bimodal_value(u[0], u[1]); };
    p.gradient_into = [](const Vector& u, Vector& g) {
        const double a = u[0];
        const double b = u[1];
        g.resize(2);
        g[0] = a * b * b + a - 4.0;
        g[1] = a * a * b + b - 4.0;
    };
    return p;
}

AnalyticDensity bimodal_density(double kappa) {
    // The two modes sit near (0.27, 3.7) and (3.7, 0.27); the box keeps the
    // neglected mass below 1e-10.
    constexpr double lo = -5.0;
    constexpr double hi = 12.0;
    AnalyticDensity d;
    d.marginal_v = gaussian_v_marginal(kappa);
    d.marginal_u = [](const Vector& u) { return std::exp(-bimodal_value(u[0], u[1])); };
    static const quad::GaussLegendre rule(400);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double a = mid + half * rule.nodes[i];
        double row = 0.0;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            row += rule.weights[j] * std::exp(-bimodal_value(a, mid + half * rule.nodes[j]));
        }
        total += rule.weights[i] * row;
    }
    d.normalizer_u = total * half * half;
    d.box_lo = lo;
    d.box_hi = hi;
    return d;
}

Potential linear_potential(Vector c) {
    Potential p;
    p.label = "linear";
    p.value = [c](const Vector& u) { return c.dot(u); };
    p.gradient_into = [c](const Vector&, Vector& g) { g = c; };
    return p;
}

GradCheckResult grad_check(const Potential& potential, std::span<const Vector> points, double eps) {
    if (!(eps > 0.0 && eps <= 1e-3)) {
        throw std::invalid_argument("grad_check needs eps in (0, 1e-3]");
    }
    GradCheckResult result;
    Vector grad;
    for (const Vector& x : points) {
        potential.gradient_into(x, grad);
        Vector probe = x;
        if (!std::isfinite(potential.value(x)) || !grad.allFinite()) {
            result.finite = false;
            result.max_relative_error = std::numeric_limits<double>::infinity();
            result.worst_point = x;
            return result;
        }
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            probe[i] = x[i] + eps;
            const double up = potential.value(probe);
            probe[i] = x[i] - eps;
            const double down = potential.value(probe);
            probe[i] = x[i];
            if (!std::isfinite(up) || !std::isfinite(down)) {
                result.finite = false;
                result.max_relative_error = std::numeric_limits<double>::infinity();
                result.worst_point = x;
                return result;
            }
            const double fd = (up - down) / (2.0 * eps);
            const double err = std::abs(fd - grad[i]) / (1.0 + std::abs(grad[i]));
            if (err > result.max_relative_error || result.worst_point.size() == 0) {
                result.max_relative_error = std::max(err, result.max_relative_error);
                result.worst_point = x;
            }
        }
    }
    return result;
}

FloorCheckResult sav_floor_check(const ModelSpec& model, std::span<const Vector> probe_points) {
    if (probe_points.empty()) {
        throw std::invalid_argument("sav_floor_check needs at least one probe point");
    }
    FloorCheckResult result;
    result.min_value = std::numeric_limits<double>::infinity();
    for (const Vector& x : probe_points) {
        const double value =
            model.kappa * model.potential_value(x) + model.c_h - model.alpha * x.squaredNorm();
        // NaN counts as a failure.
        if (!(value >= result.min_value)) {
            result.min_value = value;
            result.argmin = x;
        }
    }
    result.ok = result.min_value >= 1.0;
    return result;
}

std::vector<Vector> default_floor_probes(int dim, std::uint64_t seed) {
    constexpr int per_axis = 201;
    constexpr double lo = -10.0;
    constexpr double step = 20.0 / (per_axis - 1);
    std::vector<Vector> probes;
    if (dim == 1) {
        for (int i = 0; i < per_axis; ++i) {
            probes.push_back(Vector::Constant(1, lo + i * step));
        }
    } else if (dim == 2) {
        for (int i = 0; i < per_axis; ++i) {
            for (int j = 0; j < per_axis; ++j) {
                Vector x(2);
                x << lo + i * step, lo + j * step;
                probes.push_back(std::move(x));
            }
        }
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uni(-10.0, 10.0);
        probes.reserve(10000);
        for (int n = 0; n < 10000; ++n) {
            Vector x(dim);
            for (int i = 0; i < dim; ++i) {
                x[i] = uni(rng);
            }
            probes.push_back(std::move(x));
        }
        probes.push_back(Vector::Zero(dim));
    }
    return probes;
}

double hamiltonian(const ModelSpec& model, const Vector& v, const Vector& u) {
    return 0.5 * v.squaredNorm() + model.kappa * model.potential_value(u) + model.c_h;
}

double modified_energy(const ModelSpec& model, const AugmentedState& state) {
    return 0.5 * state.v.squaredNorm() + model.alpha * state.u.squaredNorm() +
           state.rho * state.rho;
}

}  // namespace ssav
