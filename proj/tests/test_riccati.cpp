#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "condosc/conditional.hpp"
#include "condosc/riccati.hpp"

using namespace condosc;
using Catch::Matchers::WithinRel;

namespace {

DerivedQuantities derived(double q, double eta, double n_th, double c) {
    OscillatorParams p;
    p.omega = q;
    p.gamma = 1.0;
    p.eta = eta;
    p.bath_occupancy = n_th;
    p.coop = c;
    return derive(p);
}

}  // namespace

TEST_CASE("full model construction", "[riccati]") {
    SECTION("vacuum diffusion at C = 0, n_th = 0") {
        const auto m = build_full_model(derived(1e3, 1.0, 0.0, 0.0));
        CHECK_THAT(m.diffusion[1][1], WithinRel(2.0, 1e-14));  // 4 G * 1/2
        CHECK(m.diffusion[0][0] == 0.0);
        CHECK(m.channels.size() == 1);
        CHECK(m.channels[0].row_q == 0.0);
    }
    SECTION("diffusion encodes n_tot") {
        for (double c : {0.0, 1.0, 1e4}) {
            const auto d = derived(1e3, 0.7, 123.0, c);
            const auto m = build_full_model(d);
            CHECK_THAT(m.diffusion[1][1] / 2.0, WithinRel(2.0 * d.n_tot, 1e-14));
        }
    }
    SECTION("unconditional variance solves the Lyapunov equation") {
        const auto d = derived(50.0, 1.0, 100.0, 500.0);
        const auto v = lyapunov_stationary(build_full_model(d));
        CHECK_THAT(v.v_qq, WithinRel(2.0 * 100.0 + 1.0 + 2.0 * 500.0, 1e-12));
        CHECK_THAT(v.v_pp, WithinRel(v.v_qq, 1e-12));
        CHECK(std::abs(v.c_qp) < 1e-12 * v.v_qq);
    }
}

TEST_CASE("model validation", "[riccati]") {
    StateSpaceModel m = build_full_model(derived(10.0, 1.0, 1.0, 1.0));
    SECTION("zero diffusion is rejected") {
        m.diffusion = {{{0.0, 0.0}, {0.0, 0.0}}};
        CHECK_THROWS_AS(steady_state(m), std::invalid_argument);
    }
    SECTION("asymmetric diffusion is rejected") {
        m.diffusion[0][1] = 1.0;
        CHECK_THROWS_AS(steady_state(m), std::invalid_argument);
    }
    SECTION("correlated noise is unsupported") {
        m.noise_correlation = {1.0, 0.0};
        CHECK_THROWS_AS(steady_state(m), std::invalid_argument);
    }
    SECTION("non-positive measurement noise is rejected") {
        m.channels[0].noise_psd = 0.0;
        CHECK_THROWS_AS(steady_state(m), std::invalid_argument);
    }
}

TEST_CASE("steady state equals the closed forms", "[riccati]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double q = std::pow(10.0, 7.0 * uni(rng));
        const double c = std::pow(10.0, -3.0 + 12.0 * uni(rng));
        const double n_th = uni(rng) < 0.1 ? 0.0 : std::pow(10.0, 9.0 * uni(rng));
        const double eta = 0.01 + 0.99 * uni(rng);

        const auto d = derived(q, eta, n_th, c);
        const auto cov = conditional_covariance(d);
        const auto ss = steady_state(build_full_model(d));

        CHECK_THAT(ss.v_qq, WithinRel(cov.v_qq, 1e-9));
        CHECK_THAT(ss.v_pp, WithinRel(cov.v_pp, 1e-9));
        CHECK_THAT(ss.c_qp, WithinRel(cov.c_qp, 1e-9));
        CHECK(ss.residual < 1e-10);
        // det >= 1 is asserted separately, outside the low-Q model-validity
        // pocket (see the heisenberg tests)
        CHECK(ss.v_qq * ss.v_pp - ss.c_qp * ss.c_qp > 0.0);
    }
}

TEST_CASE("newton and bisection agree", "[riccati]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double q = std::pow(10.0, 6.0 * uni(rng));
        const double c = std::pow(10.0, -2.0 + 10.0 * uni(rng));
        const double n_th = std::pow(10.0, 8.0 * uni(rng));
        const auto m = build_full_model(derived(q, 0.9, n_th, c));
        const auto a = steady_state_newton(m);
        const auto b = steady_state_bisection(m);
        CHECK_THAT(a.v_qq, WithinRel(b.v_qq, 1e-9));
        CHECK_THAT(a.c_qp, WithinRel(b.c_qp, 1e-9));
        CHECK_THAT(a.v_pp, WithinRel(b.v_pp, 1e-9));
    }
    SECTION("bisection requires the chain structure") {
        const auto m = build_rwa_model(derived(10.0, 1.0, 1.0, 1.0));
        CHECK_THROWS_AS(steady_state_bisection(m), std::invalid_argument);
    }
}

TEST_CASE("rwa model steady state", "[riccati]") {
    SECTION("isotropic solution matching the scalar Riccati root") {
        for (double c : {1e-2, 1.0, 1e3, 1e8}) {
            for (double eta : {0.25, 1.0}) {
                const auto d = derived(1e4, eta, 1e5, c);
                const auto ss = steady_state(build_rwa_model(d));
                CHECK_THAT(ss.v_pp, WithinRel(ss.v_qq, 1e-10));
                CHECK(std::abs(ss.c_qp) <= 1e-12 * ss.v_qq);
                const double expected =
                    (std::sqrt(1.0 + 16.0 * eta * c * d.n_tot) - 1.0) / (4.0 * eta * c);
                CHECK_THAT(ss.v_qq, WithinRel(expected, 1e-10));
                CHECK_THAT(ss.v_qq, WithinRel(rwa_baseline(d), 1e-6));
            }
        }
    }
    SECTION("no measurement recovers the thermal state") {
        const auto d = derived(1e4, 1.0, 1e5, 0.0);
        const auto ss = steady_state(build_rwa_model(d));
        CHECK_THAT(ss.v_qq, WithinRel(2.0 * 1e5 + 1.0, 1e-10));
    }
}
