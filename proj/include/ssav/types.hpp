#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ssav {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when κΦ(u) + C_H − α|u|² drops below the floor of 1, i.e. C_H is
/// too small for the region the trajectory visits.
class AssumptionViolation : public std::runtime_error {
public:
    AssumptionViolation(Vector point, double radicand, long step = -1);

    const Vector& point() const noexcept { return point_; }
    double radicand() const noexcept { return radicand_; }
    /// Step index at which the violation occurred, or -1 outside a trajectory.
    long step() const noexcept { return step_; }

    AssumptionViolation with_step(long step) const { return {point_, radicand_, step}; }

private:
    Vector point_;
    double radicand_;
    long step_;
};

/// The triple evolved by the scheme: momentum v, position u, auxiliary scalar ρ.
struct AugmentedState {
    Vector v;
    Vector u;
    double rho = 0.0;

    int dim() const { return static_cast<int>(u.size()); }
    bool finite() const { return v.allFinite() && u.allFinite() && std::isfinite(rho); }
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string format_vector(const Vector& x);

}  // namespace ssav
