#include "sigcorr/exact.hpp"
#include "sigcorr/reference.hpp"

#include <doctest.h>

#include <cmath>

using namespace sigcorr;

namespace {

// Independent oracle: the averaged evolution integrated with dense-matrix
// RK4, no vectorization, no matrix exponential.
Matrix rk4_propagate(const SystemModel& model, Matrix rho, double t, double h = 1e-4) {
    auto L = [&](const Matrix& r) {
        Matrix out = Complex(0, -1) * (model.hamiltonian * r - r * model.hamiltonian);
        auto add_diss = [&](const Matrix& c) {
            out += c * r * c.adjoint() -
                   0.5 * (c.adjoint() * c * r + r * c.adjoint() * c);
        };
        for (const auto& d : model.decay_channels) add_diss(d);
        for (const auto& ch : model.channels) add_diss(ch.c);
        return out;
    };
    const long n = std::lround(t / h);
    for (long i = 0; i < n; ++i) {
        Matrix k1 = L(rho);
        Matrix k2 = L((rho + 0.5 * h * k1).eval());
        Matrix k3 = L((rho + 0.5 * h * k2).eval());
        Matrix k4 = L((rho + h * k3).eval());
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return rho;
}

double pointwise_oracle(const SystemModel& model, const std::vector<TimeEntry>& sorted,
                        Matrix rho) {
    double t_prev = 0;
    for (const auto& e : sorted) {
        rho = rk4_propagate(model, rho, e.time - t_prev);
        const Matrix& c = model.channels[std::size_t(e.detector)].c;
        rho = (c * rho + rho * c.adjoint()).eval();
        t_prev = e.time;
    }
    return std::pow(2.0, -double(sorted.size())) * rho.trace().real();
}

SystemModel qubit() { return make_qubit_model(QubitExampleParams{}); }

}  // namespace

TEST_CASE("stationary one-point functions of the qubit vanish") {
    ExactEngine engine(qubit());
    CHECK(std::abs(engine.pointwise({{0, 1.0}}, InitialState::stationary())) < 1e-12);
    CHECK(std::abs(engine.pointwise({{1, 2.0}}, InitialState::stationary())) < 1e-12);
}

TEST_CASE("one-point function from an excited state matches the RK4 oracle") {
    SystemModel model = qubit();
    ExactEngine engine(model);
    Matrix rho0 = qubit_initial_state(1.0);
    for (double t : {0.0, 0.3, 1.0, 2.5}) {
        double got = engine.pointwise({{1, t}}, InitialState::density(rho0));
        CHECK(got == doctest::Approx(pointwise_oracle(model, {{1, t}}, rho0))
                         .epsilon(1e-7));
    }
}

TEST_CASE("two-point values match the RK4 oracle for both detector orders") {
    SystemModel model = qubit();
    ExactEngine engine(model);
    Matrix rho0 = qubit_initial_state(0.3);
    for (auto [d1, d2] : {std::pair{0, 1}, std::pair{1, 0}, std::pair{0, 0},
                          std::pair{1, 1}}) {
        std::vector<TimeEntry> entries = {{d1, 0.4}, {d2, 1.3}};
        double got = engine.pointwise(entries, InitialState::density(rho0));
        double want = pointwise_oracle(model, entries, rho0);
        CHECK(got == doctest::Approx(want).epsilon(1e-7));
    }
}

TEST_CASE("three-point value matches the RK4 oracle") {
    SystemModel model = qubit();
    ExactEngine engine(model);
    Matrix rho0 = qubit_initial_state(-1.0);
    std::vector<TimeEntry> entries = {{0, 0.2}, {1, 0.9}, {0, 1.7}};
    CHECK(engine.pointwise(entries, InitialState::density(rho0)) ==
          doctest::Approx(pointwise_oracle(model, entries, rho0)).epsilon(1e-7));
}

TEST_CASE("pointwise is invariant under entry permutation") {
    ExactEngine engine(qubit());
    Matrix rho0 = qubit_initial_state(0.3);
    double a = engine.pointwise({{0, 1.5}, {1, 0.5}}, InitialState::density(rho0));
    double b = engine.pointwise({{1, 0.5}, {0, 1.5}}, InitialState::density(rho0));
    CHECK(a == b);
}

TEST_CASE("pointwise does not depend on the efficiencies") {
    QubitExampleParams p;
    std::vector<TimeEntry> entries = {{0, 0.5}, {1, 1.2}};
    double base = ExactEngine(make_qubit_model(p))
                      .pointwise(entries, InitialState::stationary());
    p.eta_x = 0.5;
    p.eta_minus = 0.2;
    double changed = ExactEngine(make_qubit_model(p))
                         .pointwise(entries, InitialState::stationary());
    CHECK(base == doctest::Approx(changed).epsilon(1e-13));
}

TEST_CASE("a detector with c = 0 annihilates the pointwise correlator") {
    SystemModel model = qubit();
    model.channels.push_back({"null", Matrix::Zero(2, 2), 1.0});
    ExactEngine engine(model);
    CHECK(engine.pointwise({{2, 0.5}, {0, 1.0}},
                           InitialState::density(qubit_initial_state(1.0))) == 0.0);
}

TEST_CASE("exact same-detector coincidences are rejected") {
    ExactEngine engine(qubit());
    CHECK_THROWS_WITH_AS(
        engine.pointwise({{0, 1.0}, {0, 1.0}}, InitialState::stationary()),
        "distributional coincidence: use smoothed correlator", std::invalid_argument);
}

TEST_CASE("cross-detector coincidences average the two insertion orders") {
    ExactEngine engine(qubit());
    Matrix rho0 = qubit_initial_state(0.3);
    double at = engine.pointwise({{0, 1.0}, {1, 1.0}}, InitialState::density(rho0));
    double lo = engine.pointwise({{0, 1.0}, {1, 1.0 - 1e-7}}, InitialState::density(rho0));
    double hi = engine.pointwise({{0, 1.0}, {1, 1.0 + 1e-7}}, InitialState::density(rho0));
    CHECK(at == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-5));
}

TEST_CASE("smoothing with narrow boxes reproduces the pointwise value") {
    ExactEngine engine(qubit());
    Matrix rho0 = qubit_initial_state(1.0);
    const double w = 1e-3;
    std::vector<FilterEntry> filt = {
        {0, TestFunction::box(0.5, 0.5 + w, 1.0 / w)},
        {1, TestFunction::box(1.2, 1.2 + w, 1.0 / w)},
    };
    double smooth = engine.smoothed(filt, InitialState::density(rho0), 1e-9);
    double point = engine.pointwise({{0, 0.5}, {1, 1.2}}, InitialState::density(rho0));
    CHECK(smooth == doctest::Approx(point).epsilon(1e-3));
}

TEST_CASE("smoothed correlator is symmetric in its entries") {
    ExactEngine engine(qubit());
    std::vector<FilterEntry> ab = {
        {0, TestFunction::exponential(0.7, 8.0)},
        {1, TestFunction::exponential(0.0, 8.0)},
    };
    std::vector<FilterEntry> ba = {ab[1], ab[0]};
    double va = engine.smoothed(ab, InitialState::stationary(), 1e-8);
    double vb = engine.smoothed(ba, InitialState::stationary(), 1e-8);
    CHECK(va == doctest::Approx(vb).epsilon(1e-7));
}

TEST_CASE("stationary smoothing is invariant under a joint time shift") {
    ExactEngine engine(qubit());
    auto curve = [&](double shift) {
        std::vector<FilterEntry> filt = {
            {0, TestFunction::exponential(0.9 + shift, 10.0)},
            {1, TestFunction::exponential(shift, 10.0)},
        };
        return engine.smoothed(filt, InitialState::stationary(), 1e-8);
    };
    CHECK(curve(0.0) == doctest::Approx(curve(37.0)).epsilon(1e-6));
}

TEST_CASE("smoothed refuses more than four insertions") {
    ExactEngine engine(qubit());
    std::vector<FilterEntry> filt;
    for (int i = 0; i < 5; ++i) {
        filt.push_back({i % 2, TestFunction::exponential(double(i), 5.0)});
    }
    CHECK_THROWS_AS(engine.smoothed(filt, InitialState::stationary()),
                    std::invalid_argument);
}

TEST_CASE("equal_point_term evaluates the contraction products") {
    SystemModel model = qubit();
    const double lambda = 10.0;
    std::vector<FilterEntry> entries = {
        {0, TestFunction::exponential(0.0, lambda)},
        {0, TestFunction::exponential(0.0, lambda)},
        {1, TestFunction::exponential(0.0, lambda)},
        {0, TestFunction::exponential(1.0, lambda)},
    };
    // Same detector, same center: overlap = lambda/2, term = lambda/(8 eta) = 1.25.
    CHECK(equal_point_term(model, entries, {0, 1}, {{0, 1}}) ==
          doctest::Approx(1.25).epsilon(1e-12));
    // Different detectors: Kronecker delta kills it.
    CHECK(equal_point_term(model, entries, {0, 2}, {{0, 1}}) == 0.0);
    // Same detector, centers one unit apart.
    CHECK(equal_point_term(model, entries, {0, 3}, {{0, 1}}) ==
          doctest::Approx(1.25 * std::exp(-lambda)).epsilon(1e-10));
    // Two pairs multiply.
    CHECK(equal_point_term(model, entries, {0, 1, 0, 1}, {{0, 1}, {2, 3}}) ==
          doctest::Approx(1.25 * 1.25).epsilon(1e-10));
    // Halved efficiency doubles the term.
    SystemModel half = model;
    half.channels[0].eta = 0.5;
    CHECK(equal_point_term(half, entries, {0, 1}, {{0, 1}}) ==
          doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("full same-detector pair is the smoothed value plus the contraction") {
    ExactEngine engine(qubit());
    std::vector<FilterEntry> filt = {
        {0, TestFunction::exponential(0.0, 10.0)},
        {0, TestFunction::exponential(0.0, 10.0)},
    };
    double smooth = engine.smoothed(filt, InitialState::stationary(), 1e-8);
    double full = engine.full(filt, InitialState::stationary(), 1e-8);
    CHECK(full - smooth == doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("full cross-detector pair has no contraction") {
    ExactEngine engine(qubit());
    std::vector<FilterEntry> filt = {
        {0, TestFunction::exponential(0.4, 10.0)},
        {1, TestFunction::exponential(0.0, 10.0)},
    };
    double smooth = engine.smoothed(filt, InitialState::stationary(), 1e-8);
    double full = engine.full(filt, InitialState::stationary(), 1e-8);
    CHECK(full == smooth);
}

TEST_CASE("a silent detector still contributes its own shot noise") {
    // With c = 0 the smoothed part vanishes; full reduces to the pure
    // contraction lambda/(8 eta) = 1.25.
    SystemModel model = qubit();
    model.channels.push_back({"null", Matrix::Zero(2, 2), 1.0});
    ExactEngine engine(model);
    std::vector<FilterEntry> filt = {
        {2, TestFunction::exponential(0.0, 10.0)},
        {2, TestFunction::exponential(0.0, 10.0)},
    };
    CHECK(engine.smoothed(filt, InitialState::stationary(), 1e-8) ==
          doctest::Approx(0.0));
    CHECK(engine.full(filt, InitialState::stationary(), 1e-8) ==
          doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("initial conditions are forgotten at large times") {
    ExactEngine engine(qubit());
    std::vector<TimeEntry> late = {{0, 30.0}, {1, 30.6}};
    double from_up = engine.pointwise(late, InitialState::density(qubit_initial_state(1.0)));
    double from_down =
        engine.pointwise(late, InitialState::density(qubit_initial_state(-1.0)));
    std::vector<TimeEntry> shifted = {{0, 0.0}, {1, 0.6}};
    double stationary = engine.pointwise(shifted, InitialState::stationary());
    CHECK(from_up == doctest::Approx(stationary).epsilon(1e-9));
    CHECK(from_down == doctest::Approx(stationary).epsilon(1e-9));
}

TEST_CASE("four-point smoothing with narrow boxes matches the pointwise value") {
    ExactEngine engine(qubit());
    Matrix rho0 = qubit_initial_state(1.0);
    const double w = 1e-2;
    std::vector<double> centers = {0.2, 0.7, 1.1, 1.8};
    std::vector<FilterEntry> filt;
    std::vector<TimeEntry> pts;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const int det = int(i) % 2;
        filt.push_back({det, TestFunction::box(centers[i], centers[i] + w, 1.0 / w)});
        pts.push_back({det, centers[i]});
    }
    double smooth = engine.smoothed(filt, InitialState::density(rho0), 1e-8);
    double point = engine.pointwise(pts, InitialState::density(rho0));
    CHECK(smooth == doctest::Approx(point).epsilon(5e-2));
}

TEST_CASE("disjoint supports reduce the full correlator to the smoothed one") {
    // Truncated exponential supports five time units apart do not intersect,
    // so every contraction overlap vanishes exactly.
    ExactEngine engine(qubit());
    std::vector<FilterEntry> filt = {
        {0, TestFunction::exponential(0.0, 10.0)},
        {0, TestFunction::exponential(5.0, 10.0)},
    };
    CHECK(filt[0].f.support_hi() < filt[1].f.support_lo());
    double smooth = engine.smoothed(filt, InitialState::stationary(), 1e-8);
    double full = engine.full(filt, InitialState::stationary(), 1e-8);
    CHECK(full == smooth);
}
