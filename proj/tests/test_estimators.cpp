#include "sigcorr/estimators.hpp"
#include "sigcorr/reference.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace sigcorr;

namespace {

SystemModel silent_model(double eta) {
    SystemModel model;
    model.dim = 2;
    model.hamiltonian = Matrix::Zero(2, 2);
    model.channels.push_back({"null", Matrix::Zero(2, 2), eta});
    return model;
}

}  // namespace

TEST_CASE("ensemble estimate of pure shot noise gives lambda / (8 eta)") {
    const double lambda = 10.0;
    for (double eta : {1.0, 0.5}) {
        SystemModel model = silent_model(eta);
        std::vector<FilterEntry> entries = {
            {0, TestFunction::exponential(3.0, lambda)},
            {0, TestFunction::exponential(3.0, lambda)},
        };
        auto est = ensemble_estimate(model, entries,
                                     InitialState::density(qubit_initial_state(0.0)),
                                     4000, 1e-3, 7);
        const double expect = lambda / (8.0 * eta);
        CHECK(std::abs(est.value - expect) < 4.0 * est.stderr_ + 0.03 * expect);
    }
}

TEST_CASE("ensemble estimate agrees with the exact full correlator") {
    SystemModel model = make_qubit_model(QubitExampleParams{});
    ExactEngine engine(model);
    std::vector<FilterEntry> entries = {
        {0, TestFunction::exponential(0.4, 10.0)},
        {1, TestFunction::exponential(0.0, 10.0)},
    };
    const double exact = engine.full(entries, InitialState::stationary(), 1e-8);
    auto est = ensemble_estimate(model, entries, InitialState::stationary(), 4000, 1e-3, 3);
    CHECK(std::abs(est.value - exact) < 4.0 * est.stderr_ + 0.05 * std::abs(exact));
    CHECK(est.n_samples == 4000);
    CHECK(est.stderr_ > 0.0);
}

TEST_CASE("ensemble estimates are deterministic given the seed") {
    SystemModel model = make_qubit_model(QubitExampleParams{});
    std::vector<FilterEntry> entries = {
        {0, TestFunction::exponential(0.2, 10.0)},
        {1, TestFunction::exponential(0.0, 10.0)},
    };
    auto a = ensemble_estimate(model, entries, InitialState::stationary(), 16, 1e-3, 9, 1);
    auto b = ensemble_estimate(model, entries, InitialState::stationary(), 16, 1e-3, 9, 2);
    CHECK(a.value == b.value);
    CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("ensemble estimate rejects filters before t = 0 for fixed initial states") {
    SystemModel model = make_qubit_model(QubitExampleParams{});
    std::vector<FilterEntry> entries = {
        {0, TestFunction::exponential(0.0, 10.0)},  // support reaches below 0
        {1, TestFunction::exponential(1.0, 10.0)},
    };
    CHECK_THROWS_AS(ensemble_estimate(model, entries,
                                      InitialState::density(qubit_initial_state(0.0)),
                                      4, 1e-3, 1),
                    std::invalid_argument);
}

TEST_CASE("ergodic estimate matches the exact curve within its error bars") {
    SystemModel model = make_qubit_model(QubitExampleParams{});
    ExactEngine engine(model);
    const double lambda = 10.0;
    std::vector<double> lags = {-1.0, -0.4, 0.0, 0.4, 1.0};
    ErgodicOptions opt;
    opt.seed = 31;
    auto curve = ergodic_estimate(model, 0, 1, lambda, lags, 2000.0, opt);
    REQUIRE(curve.size() == lags.size());
    for (const auto& pt : curve) {
        std::vector<FilterEntry> entries = {
            {0, TestFunction::exponential(pt.lag, lambda)},
            {1, TestFunction::exponential(0.0, lambda)},
        };
        const double exact = engine.full(entries, InitialState::stationary(), 1e-8);
        CHECK(std::abs(pt.est.value - exact) < 4.0 * pt.est.stderr_);
        CHECK(pt.est.stderr_ > 0.0);
        CHECK(pt.est.stderr_ < 0.1);
    }
}

TEST_CASE("ergodic estimate decorrelates at lags beyond the relaxation time") {
    SystemModel model = make_qubit_model(QubitExampleParams{});
    ErgodicOptions opt;
    opt.seed = 5;
    auto curve = ergodic_estimate(model, 0, 1, 10.0, {0.5, 15.0}, 1500.0, opt);
    CHECK(std::abs(curve[1].est.value) < 4.0 * curve[1].est.stderr_);
    CHECK(std::abs(curve[0].est.value) > std::abs(curve[1].est.value));
}

TEST_CASE("ergodic estimate refuses degenerate models and short records") {
    SystemModel degenerate;
    degenerate.dim = 2;
    degenerate.hamiltonian = Matrix::Zero(2, 2);
    Matrix sz(2, 2);
    sz << 1, 0, 0, -1;
    degenerate.channels.push_back({"z", sz, 1.0});
    CHECK_THROWS_AS(ergodic_estimate(degenerate, 0, 0, 10.0, {0.0}, 100.0, {}),
                    NonUniqueStationaryState);

    SystemModel model = make_qubit_model(QubitExampleParams{});
    CHECK_THROWS_AS(ergodic_estimate(model, 0, 1, 10.0, {0.0}, 12.0, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ergodic_estimate(model, 0, 5, 10.0, {0.0}, 100.0, {}),
                    std::invalid_argument);
}

TEST_CASE("povm oracle converges to the pointwise correlator at order delta^2") {
    QubitExampleParams p;
    p.z0 = 0.3;
    SystemModel model = make_qubit_model(p);
    ExactEngine engine(model);
    InitialState rho0 = InitialState::density(qubit_initial_state(p.z0));
    std::vector<TimeEntry> entries = {{0, 0.3}, {1, 1.1}};
    const double exact = engine.pointwise(entries, rho0);

    std::vector<double> deltas = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> errs;
    for (double d : deltas) {
        errs.push_back(std::abs(povm_oracle(model, entries, rho0, d) - exact));
    }
    // log-log slope between successive deltas
    for (std::size_t i = 1; i < deltas.size(); ++i) {
        const double slope =
            std::log(errs[i - 1] / errs[i]) / std::log(deltas[i - 1] / deltas[i]);
        CHECK(slope > 1.8);
        CHECK(slope < 2.2);
    }
}

TEST_CASE("povm oracle for one probe matches the one-point function") {
    QubitExampleParams p;
    p.z0 = 1.0;
    SystemModel model = make_qubit_model(p);
    ExactEngine engine(model);
    InitialState rho0 = InitialState::density(qubit_initial_state(p.z0));
    const double exact = engine.pointwise({{1, 0.7}}, rho0);
    CHECK(povm_oracle(model, {{1, 0.7}}, rho0, 0.01) ==
          doctest::Approx(exact).epsilon(1e-3));
}

TEST_CASE("povm oracle of a silent detector vanishes for every delta") {
    SystemModel model = silent_model(1.0);
    InitialState rho0 = InitialState::density(qubit_initial_state(0.3));
    CHECK(povm_oracle(model, {{0, 0.5}}, rho0, 0.1) == 0.0);
}

TEST_CASE("povm oracle validates its arguments") {
    SystemModel model = make_qubit_model(QubitExampleParams{});
    InitialState rho0 = InitialState::stationary();
    CHECK_THROWS_AS(povm_oracle(model, {{0, 0.5}}, rho0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(povm_oracle(model, {{0, 0.5}, {0, 0.5}}, rho0, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(povm_oracle(model, {{7, 0.5}}, rho0, 0.1), std::invalid_argument);
}

TEST_CASE("estimates CSV round-trips through the expected layout") {
    std::vector<LagEstimate> curve = {{-0.5, {1.25, 0.01, 100}}, {0.5, {0.75, 0.02, 100}}};
    const std::string path = "est_tmp.csv";
    write_estimates_csv(curve, "model=abc dt=0.001", path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# model=abc dt=0.001");
    std::getline(in, line);
    CHECK(line == "lag,value,stderr,n");
    long rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
    std::remove(path.c_str());
}
