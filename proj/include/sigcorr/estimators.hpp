#pragma once

// Monte Carlo estimation of filtered correlators from simulated trajectories
// (ensemble and ergodic), and the deterministic discrete-POVM oracle.

#include "sigcorr/exact.hpp"
#include "sigcorr/trajectories.hpp"

#include <vector>

namespace sigcorr {

struct EstimateWithError {
    double value = 0;
    double stderr_ = 0;
    long n_samples = 0;
};

// Mean of Prod_i I_{l_i}(f_i) over M independent trajectories, with iid
// standard error. Deterministic given the seed; trajectory aborts are
// rethrown with the failing trajectory seed attached.
EstimateWithError ensemble_estimate(const SystemModel& model,
                                    const std::vector<FilterEntry>& entries,
                                    const InitialState& rho0, int M, double dt,
                                    std::uint64_t seed, int n_threads = 0);

struct LagEstimate {
    double lag = 0;
    EstimateWithError est;
};

struct ErgodicOptions {
    double dt = 1e-3;
    double burn_in = 10.0;
    std::uint64_t seed = 1;
    // Sample times advance by one filter support length unless overridden.
    double sample_stride = 0.0;
};

// Time-average of I_b(f^{t+tau}) * I_a(f^t) along one long stationary
// trajectory, per lag. Error bars from batch means with ~sqrt(T) batches.
// Refuses models without a unique stationary state.
std::vector<LagEstimate> ergodic_estimate(const SystemModel& model, int detector_a,
                                          int detector_b, double lambda,
                                          const std::vector<double>& lags,
                                          double T_total, const ErgodicOptions& opt);

// Deterministic evaluation of the discrete weak-measurement picture: binary
// POVMs with strength delta applied at the (sorted) times, outcome-summed
// into superoperator insertions. Converges to the pointwise correlator as
// O(delta^2).
double povm_oracle(const SystemModel& model, const std::vector<TimeEntry>& entries,
                   const InitialState& rho0, double delta);

void write_estimates_csv(const std::vector<LagEstimate>& curve,
                         const std::string& header_comment, const std::string& path);

}  // namespace sigcorr
