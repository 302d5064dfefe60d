#pragma once

// Physical model assembly: monitored channels, Lindblad generator,
// insertion superoperators, the measurement-averaged propagator and its
// stationary state.

#include "sigcorr/densemath.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace sigcorr {

struct MeasurementChannel {
    std::string label;
    Matrix c;     // d x d detector operator
    double eta;   // efficiency in (0, 1]
};

struct SystemModel {
    int dim = 0;
    Matrix hamiltonian;                        // Hermitian, may be zero
    std::vector<Matrix> decay_channels;        // unmonitored Lindblad operators
    std::vector<MeasurementChannel> channels;  // monitored channels

    // Throws std::invalid_argument on dimension mismatch, non-Hermitian H
    // (beyond 1e-12) or efficiency outside (0, 1].
    void validate() const;

    int channel_index(const std::string& label) const;
};

struct NonUniqueStationaryState : NumericError {
    int null_dimension;
    explicit NonUniqueStationaryState(int nd)
        : NumericError("stationary state is not unique: generator null-space dimension " +
                       std::to_string(nd)),
          null_dimension(nd) {}
};

// Lindblad dissipator D[c] as a d^2 x d^2 superoperator,
// D[c](rho) = c rho c^+ - {c^+ c, rho}/2.
Matrix dissipator(const Matrix& c);

// Insertion superoperator c^+ . rho = c rho + rho c^dagger.
Matrix insertion_superop(const Matrix& c);

// Nonlinear conditioning term H[c](rho) = c rho + rho c^+ - tr[(c+c^+)rho] rho.
// Applied directly to a density matrix, no vectorization.
Matrix innovation(const Matrix& c, const Matrix& rho);

// Full measurement-averaged generator -i[H, .] + sum_j D[L_j] + sum_k D[c_k].
// Does not depend on the efficiencies.
Matrix averaged_generator(const SystemModel& model);

// Memoized propagator Phi_t = exp(t * generator). Uses a spectral
// decomposition of the generator when it is well conditioned, and falls back
// to expm with per-time memoization otherwise. Safe for concurrent reads.
class PropagatorCache {
  public:
    explicit PropagatorCache(Matrix generator);

    const Matrix& generator() const { return gen_; }
    Matrix at(double t) const;
    Vector apply(double t, const Vector& v) const;

  private:
    Matrix gen_;
    bool spectral_ok_ = false;
    Matrix eigvecs_, eigvecs_inv_;
    Vector eigvals_;
    mutable std::map<double, Matrix> memo_;
    mutable std::mutex memo_mutex_;
};

Matrix propagator(const SystemModel& model, double t);

// Unique stationary state of the averaged generator. Throws
// NonUniqueStationaryState when the second-smallest |eigenvalue| is below
// 1e-6, and NumericError if the residual ||L rho_ss|| exceeds 1e-10.
Matrix stationary_state(const SystemModel& model);

// Choi matrix of a superoperator (used by the complete-positivity checks).
Matrix choi_matrix(const Matrix& superop);

}  // namespace sigcorr
