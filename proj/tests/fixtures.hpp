#pragma once

#include "ssav/model.hpp"

#include <cmath>

namespace fixtures {

inline ssav::ModelSpec gaussian_mixture() {
    return ssav::make_model(1, 2.0, 1.0, 2.0, 1.0, 1000.0,
                            ssav::builtin_gaussian_mixture(1.0, 0.5, 2.0));
}

inline ssav::ModelSpec double_well(int dim, double c_h = 1000.0) {
    return ssav::make_model(dim, 1.0, 1.0, std::sqrt(2.0), 1.0, c_h,
                            ssav::builtin_double_well(dim, 1.0));
}

inline ssav::ModelSpec bimodal() {
    return ssav::make_model(
        2, 0.1, 0.05, 0.1 * ssav::Matrix::Identity(2, 2), 1.0, 1000.0,
        std::make_shared<const ssav::Potential>(ssav::builtin_bimodal()),
        std::make_shared<const ssav::AnalyticDensity>(ssav::bimodal_density(0.1)));
}

inline ssav::Vector vec(std::initializer_list<double> xs) {
    ssav::Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) {
        v[i++] = x;
    }
    return v;
}

}  // namespace fixtures
