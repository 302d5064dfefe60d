#pragma once

// Closed-form results for the two-detector qubit example: simultaneous
// monitoring of sqrt(gamma_x) sigma_x and sqrt(gamma_minus) sigma_minus.
// The analytic oracle for the exact engine.

#include "sigcorr/exact.hpp"

namespace sigcorr {

struct QubitExampleParams {
    double gamma_x = 0.5;
    double gamma_minus = 1.0;
    double eta_x = 1.0;
    double eta_minus = 1.0;
    double z0 = 1.0;  // tr[sigma_z rho(0)] in the convention fixed below
};

// Two-channel qubit model: detector 0 is "x", detector 1 is "-".
//
// Convention note: sigma_minus = (sigma_x - i sigma_y)/2 with the standard
// Pauli matrices lowers toward the sigma_z = -1 eigenstate. The z0 of the
// closed form refers to the opposite sigma_z orientation (the one in which
// the decay channel raises z), so the engine's initial state for a given z0
// is rho(0) = (1 - z0 * sigma_z)/2. This pairing is what reproduces the
// closed form; it is exercised by the oracle tests.
SystemModel make_qubit_model(const QubitExampleParams& p);
Matrix qubit_initial_state(double z0);

// The exact cross correlator K_{x,-}(t1, t2), t1 carrying the x probe.
// In the branch where the "-" probe comes first the initial-state transient
// decays with the earlier time argument. Throws at t1 == t2 (discontinuity
// point, the pointwise value there is regularization dependent).
double kxminus_closed(const QubitExampleParams& p, double t1, double t2);

// Stationary filtered cross correlator K_{x,-}(f^tau, f^0) for first-order
// filters of bandwidth lambda, by closed-form exponential integrals.
// Continuous in tau, including tau = 0.
double kxminus_filtered(const QubitExampleParams& p, double tau, double lambda);

// Stationary filtered K_{x,x}(f^tau, f^0), evaluated through the exact
// engine (no independent closed form is asserted); includes the equal-point
// contraction lambda * exp(-lambda |tau|) / (8 eta_x).
double kxx_filtered(const QubitExampleParams& p, double tau, double lambda,
                    double tol = 1e-6);

// The equal-point part alone: overlap(f^tau, f^0) / (4 eta_x).
double kxx_equal_point_part(const QubitExampleParams& p, double tau, double lambda);

}  // namespace sigcorr
