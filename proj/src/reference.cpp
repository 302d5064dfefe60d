#include "sigcorr/reference.hpp"

#include <cmath>
#include <limits>

namespace sigcorr {

namespace {

Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Matrix sigma_minus() {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 0) = 1;
    return m;
}

// int_{s1}^{s2} e^{beta * s} ds, with +/- infinity endpoints allowed where
// the integral converges.
double exp_segment(double s1, double s2, double beta) {
    const double inf = std::numeric_limits<double>::infinity();
    if (beta == 0.0) return s2 - s1;
    const double upper = (s2 == inf) ? 0.0 : std::exp(beta * s2);
    const double lower = (s1 == -inf) ? 0.0 : std::exp(beta * s1);
    return (upper - lower) / beta;
}

}  // namespace

SystemModel make_qubit_model(const QubitExampleParams& p) {
    SystemModel model;
    model.dim = 2;
    model.hamiltonian = Matrix::Zero(2, 2);
    model.channels.push_back({"x", std::sqrt(p.gamma_x) * pauli_x(), p.eta_x});
    model.channels.push_back({"-", std::sqrt(p.gamma_minus) * sigma_minus(), p.eta_minus});
    model.validate();
    return model;
}

Matrix qubit_initial_state(double z0) {
    if (std::abs(z0) > 1.0 + 1e-12) {
        throw std::invalid_argument("qubit_initial_state: |z0| must be <= 1");
    }
    return 0.5 * (Matrix::Identity(2, 2) - z0 * pauli_z());
}

double kxminus_closed(const QubitExampleParams& p, double t1, double t2) {
    if (t1 < 0 || t2 < 0) throw std::invalid_argument("kxminus_closed: times must be >= 0");
    if (t1 == t2) {
        throw std::invalid_argument(
            "kxminus_closed: discontinuity point, value at t1 == t2 is "
            "regularization dependent");
    }
    const double gm = p.gamma_minus, gx = p.gamma_x;
    const double G = gm + 2.0 * gx;
    const double pref = 0.5 * std::sqrt(gm * gx) * std::exp(-0.5 * gm * std::abs(t2 - t1));
    if (t2 > t1) return pref;
    // "-" probe first: the transient decays with the earlier time argument.
    const double t_early = t2;
    return pref * (2.0 * gx / G - (p.z0 - gm / G) * std::exp(-G * t_early));
}

double kxminus_filtered(const QubitExampleParams& p, double tau, double lambda) {
    if (lambda <= 0) throw std::invalid_argument("kxminus_filtered: lambda must be > 0");
    const double gm = p.gamma_minus, gx = p.gamma_x;
    const double G = gm + 2.0 * gx;
    const double a = 0.5 * gm;
    const double C = 0.5 * std::sqrt(gm * gx);
    const double B = 2.0 * gx / G;

    // Stationary value of z from the engine's stationary state; the closed
    // form is translation invariant only because the transient coefficient
    // vanishes there.
    const Matrix rho_ss = stationary_state(make_qubit_model(p));
    const double z_star = -(pauli_z() * rho_ss).trace().real();
    if (std::abs(z_star - gm / G) > 1e-9) {
        throw NumericError("kxminus_filtered: stationary z inconsistent with closed form");
    }

    // G(tau) = Int ds (lambda/2) e^{-lambda |tau - s|} * C * k(s),
    //   k(s) = e^{a s} for s < 0 (x probe earlier), B e^{-a s} for s > 0.
    // Piecewise exponential integrals split at s = 0 and s = tau.
    const double inf = std::numeric_limits<double>::infinity();
    const double p1 = std::min(0.0, tau), p2 = std::max(0.0, tau);
    const double half = 0.5 * lambda * C;
    double acc = 0.0;
    // s < p1: s below both breakpoints
    acc += half * std::exp(-lambda * tau) * exp_segment(-inf, p1, lambda + a);
    // middle region
    if (tau > 0) {
        acc += half * B * std::exp(-lambda * tau) * exp_segment(0.0, tau, lambda - a);
    } else if (tau < 0) {
        acc += half * std::exp(lambda * tau) * exp_segment(tau, 0.0, a - lambda);
    }
    // s > p2
    acc += half * B * std::exp(lambda * tau) * exp_segment(p2, inf, -(lambda + a));
    return acc;
}

double kxx_filtered(const QubitExampleParams& p, double tau, double lambda, double tol) {
    ExactEngine engine(make_qubit_model(p));
    std::vector<FilterEntry> entries = {
        {0, TestFunction::exponential(tau, lambda)},
        {0, TestFunction::exponential(0.0, lambda)},
    };
    return engine.full(entries, InitialState::stationary(), tol);
}

double kxx_equal_point_part(const QubitExampleParams& p, double tau, double lambda) {
    return overlap(TestFunction::exponential(tau, lambda),
                   TestFunction::exponential(0.0, lambda)) /
           (4.0 * p.eta_x);
}

}  // namespace sigcorr
