#include "fixtures.hpp"
#include "ssav/experiments.hpp"
#include "ssav/integrators.hpp"
#include "ssav/stats.hpp"

#include <doctest.h>

#include <random>

using namespace ssav;
using fixtures::vec;

namespace {

AugmentedState random_state(const ModelSpec& m, std::mt19937_64& rng, double box = 3.0) {
    return uniform_state_sampler(m, box)(rng);
}

double max_abs_diff(const AugmentedState& a, const AugmentedState& b) {
    return std::max({(a.v - b.v).cwiseAbs().maxCoeff(), (a.u - b.u).cwiseAbs().maxCoeff(),
                     std::abs(a.rho - b.rho)});
}

}  // namespace

TEST_CASE("deterministic substep: zero step leaves the state unchanged") {
    const ModelSpec m = fixtures::double_well(2);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const AugmentedState s = random_state(m, rng);
        const AugmentedState t = ssav_deterministic_substep(m, s, 1e-12);
        CHECK(max_abs_diff(s, t) <= 1e-10 * (1.0 + s.rho));
    }
}

TEST_CASE("deterministic substep: closed form with Q = 0") {
    const ModelSpec m = fixtures::double_well(1);
    const AugmentedState s{vec({0.9}), vec({0.0}), 5.0};
    const AugmentedState t = ssav_deterministic_substep(m, s, 0.5);
    CHECK(t.rho == 5.0);
    CHECK(t.v[0] == doctest::Approx(7.0 / 9.0 * 0.9).epsilon(1e-15));
    CHECK(t.u[0] == doctest::Approx(4.0 / 9.0 * 0.9).epsilon(1e-15));
}

TEST_CASE("explicit substep agrees with the Picard oracle") {
    std::mt19937_64 rng(2);
    for (const ModelSpec& m : {fixtures::double_well(2), fixtures::gaussian_mixture(),
                               fixtures::bimodal(), fixtures::double_well(20)}) {
        for (int i = 0; i < 200; ++i) {
            const AugmentedState s = random_state(m, rng, m.dim > 2 ? 1.0 : 3.0);
            for (double h : {1e-3, 0.0625}) {
                const AugmentedState e = ssav_deterministic_substep(m, s, h);
                const PicardResult p = ssav_implicit_oracle(m, s, h, 1e-13, 200);
                CHECK(max_abs_diff(e, p.state) <= (h == 1e-3 ? 1e-11 : 1e-10));
            }
        }
    }
}

TEST_CASE("Picard oracle: linear case and failure") {
    const ModelSpec m = fixtures::double_well(1);
    const AugmentedState s{vec({0.7}), vec({0.0}), 3.0};
    const PicardResult p = ssav_implicit_oracle(m, s, 1e-3);
    CHECK(p.iterations <= 6);
    CHECK(max_abs_diff(p.state, ssav_deterministic_substep(m, s, 1e-3)) <= 1e-13);

    const PicardResult tiny = ssav_implicit_oracle(m, s, 1e-14);
    CHECK(max_abs_diff(tiny.state, s) <= 1e-12);

    CHECK_THROWS_AS(ssav_implicit_oracle(m, s, 0.5, 1e-13, 2), NoConvergence);
}

TEST_CASE("energy identity and rho identity across the substep") {
    std::mt19937_64 rng(3);
    for (const ModelSpec& m : {fixtures::double_well(1), fixtures::gaussian_mixture(),
                               fixtures::bimodal()}) {
        StepWorkspace ws(m.dim);
        for (int i = 0; i < 10000; ++i) {
            const AugmentedState s = random_state(m, rng);
            const double e0 = modified_energy(m, s);
            for (double h : {1.0, 0.25, -0.5, 1e-3, -1e-3}) {
                const AugmentedState t = ssav_deterministic_substep(m, s, h);
                REQUIRE(std::abs(modified_energy(m, t) - e0) <= 1e-10 * (1.0 + e0));
                const Vector q = q_vector(m, s.u);
                const double two_i = 2.0 * i_factor(m, s, q, h);
                REQUIRE(std::abs(t.rho + s.rho - two_i) <= 1e-12 * std::abs(two_i));
            }
        }
    }
}

TEST_CASE("ou_substep") {
    const ModelSpec m = fixtures::double_well(1);
    const StepNoise zero = StepNoise::zero(1);
    CHECK(ou_substep(m, vec({3.0}), std::log(2.0), zero)[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(ou_substep(m, vec({3.0}), 1e-14, zero)[0] == doctest::Approx(3.0).epsilon(1e-13));
    CHECK_THROWS_AS(ou_substep(m, vec({3.0}), 0.0, zero), std::invalid_argument);
}

TEST_CASE("ou_substep chain reaches the stationary variance") {
    // Γ = √2, γ = 1: stationary variance ‖Γ‖²/(2γ) = 1.
    const ModelSpec m = fixtures::double_well(1);
    const double h = 0.5;
    const long n = 1000000;
    NoisePlan plan(17, 0, m.gamma, 1, h, n);
    CoupledNoise noise(m, plan, 1);
    StepNoise sn = StepNoise::zero(1);
    Vector v = vec({0.0});
    stats::RunningStats sq;
    for (long i = 0; i < n; ++i) {
        noise.next(sn);
        v = ou_substep(m, v, h, sn);
        if (i >= 100) {
            sq.add(v[0] * v[0]);
        }
    }
    CHECK(sq.mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("ssav_step composes the two substeps") {
    const ModelSpec m = fixtures::double_well(1);
    const AugmentedState s{vec({0.9}), vec({0.0}), 5.0};
    const AugmentedState t = ssav_step(m, s, 0.5, StepNoise::zero(1));
    CHECK(t.v[0] == doctest::Approx(std::exp(-0.5) * 7.0 / 9.0 * 0.9).epsilon(1e-15));
    CHECK(t.u[0] == doctest::Approx(4.0 / 9.0 * 0.9).epsilon(1e-15));
    CHECK(t.rho == 5.0);

    ModelSpec damped = m;
    damped.gamma = 200.0;
    const AugmentedState d = ssav_step(damped, s, 0.5, StepNoise::zero(1));
    CHECK(std::abs(d.v[0]) < 1e-40);
}

TEST_CASE("Euler-Maruyama step") {
    const ModelSpec m = fixtures::double_well(1);
    auto [v0, u0] = em_step(m, vec({0.3}), vec({0.7}), 0.0, vec({0.0}));
    CHECK(v0[0] == 0.3);
    CHECK(u0[0] == 0.7);

    auto [v1, u1] = em_step(m, vec({0.0}), vec({2.0}), 0.25, vec({0.0}));
    CHECK(v1[0] == doctest::Approx(-1.5));
    CHECK(u1[0] == 2.0);

    auto [v2, u2] = em_step(m, vec({0.0}), vec({0.0}), 0.25, vec({1.0}));
    CHECK(v2[0] == doctest::Approx(std::sqrt(2.0)));

    // Deterministic explosion from a large position at a coarse step.
    Vector v = vec({0.0}), u = vec({10.0});
    double prev = 10.0;
    for (int i = 0; i < 4; ++i) {
        std::tie(v, u) = em_step(m, v, u, 0.25, vec({0.0}));
        if (i >= 1) {
            CHECK(std::abs(u[0]) >= 2.0 * prev);
        }
        prev = std::abs(u[0]);
    }
}

TEST_CASE("run_trajectory basics") {
    const ModelSpec m = fixtures::double_well(1);
    const AugmentedState init = make_initial_state(m, vec({0.5}), vec({1.0}));
    const double h = 0.125;

    NoisePlan plan(3, 0, m.gamma, 1, h, 16);
    CoupledNoise noise(m, plan, 1);
    const auto one = run_trajectory(m, init, h, 1, noise);
    REQUIRE(one.states.size() == 2);
    noise.reset();
    StepNoise sn = StepNoise::zero(1);
    noise.next(sn);
    const AugmentedState expect = ssav_step(m, init, h, sn);
    CHECK(one.states[0].u == init.u);
    CHECK(one.states[1].v == expect.v);
    CHECK(one.states[1].u == expect.u);
    CHECK(one.states[1].rho == expect.rho);

    CoupledNoise n1(m, plan, 1), n2(m, plan, 1);
    const auto a = run_trajectory(m, init, h, 16, n1, 4);
    const auto b = run_trajectory(m, init, h, 16, n2, 4);
    REQUIRE(a.states.size() == 5);
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        CHECK(a.times[i] == doctest::Approx(0.5 * static_cast<double>(i)));
        CHECK(a.states[i].v == b.states[i].v);
        CHECK(a.states[i].rho == b.states[i].rho);
    }

    CHECK_THROWS_AS(run_trajectory(m, init, h, 0, n1), std::invalid_argument);
}

TEST_CASE("run_trajectory: without noise the modified energy never increases") {
    ModelSpec m = fixtures::double_well(2);
    m.noise_matrix.setZero();
    const AugmentedState init = make_initial_state(m, vec({1.0, -0.5}), vec({0.3, 1.2}));
    ZeroNoise zero;
    const auto rec = run_trajectory(m, init, 0.01, 1000, zero, 10);
    for (std::size_t i = 1; i < rec.energies.size(); ++i) {
        CHECK(rec.energies[i] <= rec.energies[i - 1] * (1.0 + 1e-14));
    }
    // The kinetic part decays at rate 2γ under the exact OU substep.
    CHECK(rec.energies.front() - rec.energies.back() > 0.1);
}

TEST_CASE("run_trajectory reports the failing step") {
    // C_H = 1: the radicand u⁴/4 − 3u²/2 + 1 drops below 1 as soon as u leaves 0.
    const ModelSpec m = fixtures::double_well(1, 1.0);
    const AugmentedState init = make_initial_state(m, vec({1.0}), vec({0.0}));
    ZeroNoise zero;
    try {
        run_trajectory(m, init, 0.1, 10, zero);
        FAIL("expected AssumptionViolation");
    } catch (const AssumptionViolation& e) {
        CHECK(e.step() == 1);
        CHECK(e.radicand() < 1.0);
    }

    // Euler–Maruyama records the first non-finite state instead.
    const ModelSpec dw = fixtures::double_well(1);
    const AugmentedState far = make_initial_state(dw, vec({0.0}), vec({20.0}));
    const auto rec = run_trajectory(dw, far, 0.25, 100, zero, 1, Method::EulerMaruyama);
    REQUIRE(rec.first_failure.has_value());
    CHECK(*rec.first_failure < 100);
    CHECK_FALSE(rec.states.back().finite());
    CHECK(rec.states.size() == static_cast<std::size_t>(*rec.first_failure) + 1);
}

TEST_CASE("rho drifts from rho_init(u) at first order in h") {
    const ModelSpec m = fixtures::gaussian_mixture();
    const int fine_level = 10;
    const int paths = 40;
    std::vector<double> drift;
    for (int k : {4, 5, 6}) {
        double total = 0.0;
        for (int p = 0; p < paths; ++p) {
            const NoisePlan plan = sample_fine_pairs(23, static_cast<std::uint64_t>(p), m.gamma, 1,
                                                     fine_level, 1.0);
            CoupledNoise noise(m, plan, std::int64_t{1} << (fine_level - k));
            const AugmentedState init = make_initial_state(m, vec({1.0}), vec({1.0}));
            const auto rec =
                run_trajectory(m, init, std::ldexp(1.0, -k), std::int64_t{1} << k, noise);
            double worst = 0.0;
            for (const auto& s : rec.states) {
                worst = std::max(worst, std::abs(rho_init(m, s.u) - s.rho));
            }
            total += worst;
        }
        drift.push_back(total / paths);
    }
    MESSAGE("mean max drift at h = 2^-4, 2^-5, 2^-6: " << drift[0] << ", " << drift[1] << ", "
                                                       << drift[2]);
    for (int i = 0; i < 2; ++i) {
        const double ratio = drift[static_cast<std::size_t>(i)] / drift[static_cast<std::size_t>(i) + 1];
        CHECK(ratio >= 1.6);
        CHECK(ratio <= 2.4);
    }
}
