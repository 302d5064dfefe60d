#pragma once

// Exact correlators of the measured signals: pointwise multi-time values,
// smoothed (filtered) correlators, and the full correlator including the
// same-detector equal-point contractions.

#include "sigcorr/filters.hpp"
#include "sigcorr/model.hpp"

#include <optional>
#include <vector>

namespace sigcorr {

struct TimeEntry {
    int detector;
    double time;
};

struct FilterEntry {
    int detector;
    TestFunction f;
};

// Initial state: an explicit density matrix, or the stationary state of the
// averaged evolution.
class InitialState {
  public:
    static InitialState density(Matrix rho) {
        InitialState s;
        s.rho_ = std::move(rho);
        return s;
    }
    static InitialState stationary() { return InitialState{}; }
    bool is_stationary() const { return !rho_.has_value(); }
    const Matrix& density_matrix() const { return *rho_; }

  private:
    InitialState() = default;
    std::optional<Matrix> rho_;
};

class ExactEngine {
  public:
    explicit ExactEngine(SystemModel model);

    const SystemModel& model() const { return model_; }
    const PropagatorCache& propagators() const { return prop_; }
    const Matrix& stationary() const;  // cached rho_ss

    // Trace formula: K = 2^-N Re tr[c+_{lN} Phi ... c+_{l1} Phi_{t1} rho(0)].
    // Entries are sorted by time internally; exact same-detector coincidences
    // are rejected, cross-detector coincidences average both insertion orders.
    double pointwise(const std::vector<TimeEntry>& entries, const InitialState& rho0) const;

    // K-circle: the permutation-symmetric filtered correlator, an N-dim
    // adaptive quadrature of the pointwise kernel. N <= 4.
    double smoothed(const std::vector<FilterEntry>& entries, const InitialState& rho0,
                    double tol = 1e-6) const;

    // K-circle plus the Wick sum of same-detector equal-point contractions.
    double full(const std::vector<FilterEntry>& entries, const InitialState& rho0,
                double tol = 1e-6) const;

    // Kernel value at time-sorted entries against a fixed vectorized initial
    // state. Used by the quadrature internals; no input validation.
    double kernel_at(const std::vector<TimeEntry>& sorted, const Vector& v0) const;

  private:
    double pointwise_kernel(std::vector<TimeEntry> sorted, const Vector& v0) const;
    double smoothed_stationary_pair(const std::vector<FilterEntry>& entries,
                                    double tol) const;
    double kernel_sep_impl(double sep, const Vector& v0, int det1, int det2) const;
    Vector initial_vec(const InitialState& rho0) const;

    SystemModel model_;
    PropagatorCache prop_;
    std::vector<Matrix> insertions_;
    mutable std::optional<Matrix> rho_ss_;
};

// All insertion orders consistent with a time-sorted entry list: blocks of
// exactly coincident times are expanded into their permutations. Values at
// coincidences are defined as the average over these orders.
std::vector<std::vector<TimeEntry>> coincidence_orderings(
    const std::vector<TimeEntry>& sorted);

// Product over the pairs of [delta_{det,det'} / (4 eta)] * overlap(f_p, f_p').
// `subset` selects positions in `entries`; the pairing indexes into `subset`.
double equal_point_term(const SystemModel& model, const std::vector<FilterEntry>& entries,
                        const std::vector<int>& subset, const Pairing& pairing);

}  // namespace sigcorr
