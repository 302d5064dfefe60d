#pragma once

// Stochastic integration of the monitored evolution: the nonlinear equation
// with signal records, and the linear (unnormalized) equation whose trace is
// an importance weight.

#include "sigcorr/model.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sigcorr {

struct PositivityError : NumericError {
    long step;
    explicit PositivityError(long s, double min_eig)
        : NumericError("state positivity violated at step " + std::to_string(s) +
                       " (min eigenvalue " + std::to_string(min_eig) + ")"),
          step(s) {}
};

// Per-detector independent Gaussian increment streams, variance dt.
// Reproducible: the same seed yields bit-identical streams, and each
// detector's stream is independent of the others.
class NoiseStream {
  public:
    NoiseStream(std::uint64_t seed, int n_detectors, double dt);
    double next(int detector);

  private:
    std::vector<std::mt19937_64> gens_;
    std::normal_distribution<double> normal_;
};

// Derives an independent per-worker seed from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct Trajectory {
    double dt = 0;
    long n_steps = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> dr;   // [detector][step]
    int snapshot_stride = 0;               // 0: no snapshots
    std::vector<double> snapshot_times;
    std::vector<Matrix> snapshots;         // rho (nonlinear) or rho-tilde (linear)
    std::vector<double> trace_weight;      // linear mode: tr[rho-tilde] per step

    // Positivity diagnostics (nonlinear integration). Naive Euler pushes the
    // state transiently outside the PSD cone near purity; the excursions are
    // mean reverting and are reported rather than suppressed.
    double min_eig_observed = 0.0;         // worst eigenvalue along the run
    long steps_below_tol = 0;              // steps with min eigenvalue < -1e-3
};

enum class LinearMode { PhysicalNoise, WienerDriven };

// Euler-Maruyama integration of the nonlinear equation with post-step
// Hermitization and trace renormalization. Signal increments are recorded
// with the pre-update state. Positivity is monitored, not enforced: the
// worst excursion is reported in the trajectory, and PositivityError fires
// only when the state leaves the recoverable region entirely (eigenvalue
// below -10 or non-finite entries).
Trajectory simulate(const SystemModel& model, const Matrix& rho0, double dt, double T,
                    std::uint64_t seed, int snapshot_stride = 0);

// Streaming variant: per step the sink receives the step index and the
// signal increments of that step (one per detector). Avoids storing long
// records. Returns the worst eigenvalue observed.
double simulate_stream(const SystemModel& model, const Matrix& rho0, double dt,
                       long n_steps, std::uint64_t seed,
                       const std::function<void(long step, std::span<const double> dr)>& sink);

// Euler integration of the linear equation driven by dr. In PhysicalNoise
// mode a nonlinear trajectory is integrated concurrently on the same noise
// and supplies the physical dr; in WienerDriven mode dr_k = dW_k/(2 sqrt(eta_k))
// and tr[rho-tilde(T)] is the importance weight.
Trajectory simulate_linear(const SystemModel& model, const Matrix& rho0, double dt,
                           double T, std::uint64_t seed, LinearMode mode,
                           int snapshot_stride = 0);

// CSV dump: header lines carry dt, seed and the model hash; columns are
// (step, time, dr_1, ..., dr_n). Optional snapshot sidecar.
void write_trajectory_csv(const Trajectory& traj, const std::string& model_hash_hex,
                          const std::vector<std::string>& detector_labels,
                          const std::string& path,
                          const std::string& snapshot_sidecar_path = "");

}  // namespace sigcorr
