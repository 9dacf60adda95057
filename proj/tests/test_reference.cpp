#include "fixtures.hpp"
#include "oracle.hpp"
#include "ssav/reference.hpp"
#include "ssav/stats.hpp"

#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>

using namespace ssav;

TEST_CASE("gaussian mixture coordinate CDF matches the closed form") {
    const ModelSpec m = fixtures::gaussian_mixture();
    const auto cdfs = coordinate_cdfs(*m.density, 1);
    REQUIRE(cdfs.size() == 1);
    const boost::math::normal_distribution<double> right(1.0, 0.5), left(-1.0, 0.5);
    for (double x = -6.5; x <= 6.5; x += 0.173) {
        const double exact = boost::math::cdf(right, x) / 3.0 + 2.0 * boost::math::cdf(left, x) / 3.0;
        CHECK(std::abs(cdfs[0](x) - exact) <= 1e-7);
    }
}

TEST_CASE("bimodal coordinate CDFs are symmetric and normalized") {
    const ModelSpec m = fixtures::bimodal();
    const auto cdfs = coordinate_cdfs(*m.density, 2);
    REQUIRE(cdfs.size() == 2);
    for (double x : {-1.0, 0.0, 0.5, 1.0, 2.0, 4.0}) {
        CHECK(cdfs[0](x) == doctest::Approx(cdfs[1](x)).epsilon(1e-10));
    }
    CHECK(cdfs[0](12.0) == 1.0);
    CHECK(cdfs[0].mass() == doctest::Approx(oracle::value("bimodal normalizer")).epsilon(1e-8));
    CHECK_THROWS_AS(coordinate_cdfs(*fixtures::double_well(20).density, 20), std::invalid_argument);
}

TEST_CASE("stationary expectations by quadrature") {
    const ModelSpec dw = fixtures::double_well(1);
    auto sq = [](double v, double u) { return 2.0 * (v * v + u * u); };
    auto sine = [](double v, double u) { return 2.0 * std::sin(1.0 + std::hypot(v, u)); };
    CHECK(stationary_expectation(*dw.density, sq) ==
          doctest::Approx(oracle::value("dw E[2|x|^2]")).epsilon(1e-9));
    CHECK(stationary_expectation(*dw.density, sine) ==
          doctest::Approx(oracle::value("dw E[2 sin(1+|x|)]")).epsilon(1e-9));

    const ModelSpec gm = fixtures::gaussian_mixture();
    CHECK(stationary_expectation(*gm.density, sq) ==
          doctest::Approx(oracle::value("gm E[2|x|^2]")).epsilon(1e-9));
    CHECK(stationary_expectation(*gm.density, sine) ==
          doctest::Approx(oracle::value("gm E[2 sin(1+|x|)]")).epsilon(1e-9));
}

TEST_CASE("rejection sampler reproduces the reference marginals") {
    for (const ModelSpec& m : {fixtures::gaussian_mixture(), fixtures::double_well(1),
                               fixtures::bimodal()}) {
        const StationarySampler sampler(m);
        const auto cdfs = coordinate_cdfs(*m.density, m.dim);
        const long n = 5000;
        std::vector<std::vector<double>> xs(static_cast<std::size_t>(m.dim));
        stats::RunningStats v2;
        for (long p = 0; p < n; ++p) {
            PathUniforms uni(31, static_cast<std::uint64_t>(p), 0);
            const Vector u = sampler.draw_u(uni);
            for (int i = 0; i < m.dim; ++i) {
                xs[static_cast<std::size_t>(i)].push_back(u[i]);
            }
            const Vector v = sampler.draw_v(31, static_cast<std::uint64_t>(p));
            v2.add(v[0] * v[0]);
        }
        for (int i = 0; i < m.dim; ++i) {
            const auto& cdf = cdfs[static_cast<std::size_t>(i)];
            const double d = stats::ks_statistic(xs[static_cast<std::size_t>(i)],
                                                 [&](double x) { return cdf(x); });
            CHECK(d <= stats::ks_critical_99(static_cast<std::size_t>(n)));
        }
        CHECK(std::abs(v2.mean() - m.kappa) <= 4.0 * v2.stderr_of_mean());
    }
}
