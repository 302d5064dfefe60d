#include "sigcorr/reference.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>

using namespace sigcorr;

TEST_CASE("engine matches the closed-form cross correlator on a 20x20 grid") {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (double z0 : {-1.0, 0.0, 0.3, 1.0}) {
        QubitExampleParams p;
        p.z0 = z0;
        ExactEngine engine(make_qubit_model(p));
        InitialState rho0 = InitialState::density(qubit_initial_state(z0));
        for (int i = 0; i < 20; ++i) {
            for (int j = 0; j < 20; ++j) {
                const double t1 = 0.05 + 0.15 * i;
                const double t2 = 0.11 + 0.1475 * j;  // grids offset: never t1 == t2
                const double closed = kxminus_closed(p, t1, t2);
                const double got = engine.pointwise({{0, t1}, {1, t2}}, rho0);
                worst = std::max(worst, std::abs(got - closed));
            }
        }
    }
    CHECK(worst < 1e-8);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed < 10.0);
}

TEST_CASE("both orderings are covered by the closed form branches") {
    QubitExampleParams p;
    p.z0 = 1.0;
    ExactEngine engine(make_qubit_model(p));
    InitialState rho0 = InitialState::density(qubit_initial_state(p.z0));
    // x probe before the - probe: bare prefactor branch
    CHECK(engine.pointwise({{0, 0.0}, {1, 1.0}}, rho0) ==
          doctest::Approx(0.5 * std::sqrt(0.5) * std::exp(-0.5)).epsilon(1e-10));
    // - probe first: transient branch
    CHECK(engine.pointwise({{0, 1.5}, {1, 0.5}}, rho0) ==
          doctest::Approx(kxminus_closed(p, 1.5, 0.5)).epsilon(1e-10));
}

TEST_CASE("the cross correlator is asymmetric in its time arguments") {
    QubitExampleParams p;
    p.z0 = 1.0;
    CHECK(std::abs(kxminus_closed(p, 0.5, 1.5) - kxminus_closed(p, 1.5, 0.5)) > 1e-6);
}

TEST_CASE("closed form agreement is invariant under the efficiencies") {
    for (double ex : {0.2, 0.5, 1.0}) {
        for (double em : {0.2, 0.5, 1.0}) {
            QubitExampleParams p;
            p.eta_x = ex;
            p.eta_minus = em;
            p.z0 = 0.3;
            ExactEngine engine(make_qubit_model(p));
            InitialState rho0 = InitialState::density(qubit_initial_state(p.z0));
            CHECK(engine.pointwise({{0, 0.3}, {1, 1.1}}, rho0) ==
                  doctest::Approx(kxminus_closed(p, 0.3, 1.1)).epsilon(1e-10));
            CHECK(engine.pointwise({{0, 1.1}, {1, 0.3}}, rho0) ==
                  doctest::Approx(kxminus_closed(p, 1.1, 0.3)).epsilon(1e-10));
        }
    }
}

TEST_CASE("closed form rejects the coincidence point and negative times") {
    QubitExampleParams p;
    CHECK_THROWS_AS(kxminus_closed(p, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(kxminus_closed(p, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("the correlator decays exponentially in the time separation") {
    QubitExampleParams p;
    const double C = 0.5 * std::sqrt(p.gamma_minus * p.gamma_x) * 2.0;
    for (double sep : {1.0, 3.0, 6.0}) {
        CHECK(std::abs(kxminus_closed(p, 0.2, 0.2 + sep)) <=
              C * std::exp(-0.5 * p.gamma_minus * sep) + 1e-15);
    }
}

TEST_CASE("filtered cross correlator matches a direct quadrature of the kernel") {
    QubitExampleParams p;
    const double lambda = 10.0;
    for (double tau : {-1.2, -0.3, 0.0, 0.4, 1.5}) {
        // Direct 1D integral of overlap(f^tau, f^0 shifted) against the
        // stationary kernel, using the engine rather than the closed form.
        ExactEngine engine(make_qubit_model(p));
        std::vector<FilterEntry> entries = {
            {0, TestFunction::exponential(tau, lambda)},
            {1, TestFunction::exponential(0.0, lambda)},
        };
        double via_engine = engine.smoothed(entries, InitialState::stationary(), 1e-9);
        CHECK(kxminus_filtered(p, tau, lambda) ==
              doctest::Approx(via_engine).epsilon(1e-5));
    }
}

TEST_CASE("filtered cross correlator is continuous at zero lag") {
    QubitExampleParams p;
    const double lambda = 10.0;
    const double mid = kxminus_filtered(p, 0.0, lambda);
    const double left = kxminus_filtered(p, -1e-6, lambda);
    const double right = kxminus_filtered(p, 1e-6, lambda);
    CHECK(std::abs(left - mid) < 1e-4);
    CHECK(std::abs(right - mid) < 1e-4);
}

TEST_CASE("filtered cross correlator equals the full correlator (no contraction)") {
    QubitExampleParams p;
    ExactEngine engine(make_qubit_model(p));
    std::vector<FilterEntry> entries = {
        {0, TestFunction::exponential(0.7, 10.0)},
        {1, TestFunction::exponential(0.0, 10.0)},
    };
    CHECK(engine.full(entries, InitialState::stationary(), 1e-8) ==
          doctest::Approx(kxminus_filtered(p, 0.7, 10.0)).epsilon(1e-6));
}

TEST_CASE("equal-point part of K_xx at zero lag is lambda / (8 eta)") {
    QubitExampleParams p;
    CHECK(kxx_equal_point_part(p, 0.0, 10.0) == doctest::Approx(1.25).epsilon(1e-12));
    p.eta_x = 0.5;
    CHECK(kxx_equal_point_part(p, 0.0, 10.0) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("K_xx splits into a smooth part plus the equal-point part") {
    QubitExampleParams p;
    const double lambda = 10.0, tau = 0.0;
    ExactEngine engine(make_qubit_model(p));
    std::vector<FilterEntry> entries = {
        {0, TestFunction::exponential(tau, lambda)},
        {0, TestFunction::exponential(0.0, lambda)},
    };
    double smooth = engine.smoothed(entries, InitialState::stationary(), 1e-8);
    CHECK(kxx_filtered(p, tau, lambda, 1e-8) ==
          doctest::Approx(smooth + kxx_equal_point_part(p, tau, lambda)).epsilon(1e-9));
}

TEST_CASE("lower eta_x raises K_xx at zero lag but leaves K_x- unchanged") {
    QubitExampleParams full_eff;
    QubitExampleParams half_eff;
    half_eff.eta_x = 0.5;
    const double lambda = 10.0;
    const double dxx =
        kxx_filtered(half_eff, 0.0, lambda, 1e-8) - kxx_filtered(full_eff, 0.0, lambda, 1e-8);
    CHECK(dxx == doctest::Approx(lambda / 8.0 * (1.0 / 0.5 - 1.0)).epsilon(1e-8));
    CHECK(kxminus_filtered(half_eff, 0.4, lambda) ==
          doctest::Approx(kxminus_filtered(full_eff, 0.4, lambda)).epsilon(1e-13));
}
