#include "sigcorr/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace sigcorr {

namespace {
constexpr int kMaxFilteredOrder = 4;  // smoothed correlators refuse N > 4
}

ExactEngine::ExactEngine(SystemModel model)
    : model_(std::move(model)), prop_(averaged_generator(model_)) {
    for (const auto& ch : model_.channels) {
        insertions_.push_back(insertion_superop(ch.c));
    }
}

const Matrix& ExactEngine::stationary() const {
    if (!rho_ss_) rho_ss_ = stationary_state(model_);
    return *rho_ss_;
}

Vector ExactEngine::initial_vec(const InitialState& rho0) const {
    if (rho0.is_stationary()) return vec(stationary());
    const Matrix& rho = rho0.density_matrix();
    if (rho.rows() != model_.dim || rho.cols() != model_.dim) {
        throw std::invalid_argument("initial state: wrong dimension");
    }
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(rho.trace() - Complex(1.0)) > 1e-9) {
        throw std::invalid_argument("initial state: not a unit-trace Hermitian matrix");
    }
    return vec(rho);
}

std::vector<std::vector<TimeEntry>> coincidence_orderings(
    const std::vector<TimeEntry>& sorted) {
    const std::size_t n = sorted.size();
    std::vector<std::vector<TimeEntry>> orderings;
    orderings.push_back(sorted);
    auto by_detector = [](const TimeEntry& a, const TimeEntry& b) {
        return a.detector < b.detector;
    };
    for (std::size_t i = 0; i + 1 < n;) {
        std::size_t j = i + 1;
        while (j < n && sorted[j].time == sorted[i].time) ++j;
        if (j - i > 1) {
            std::vector<std::vector<TimeEntry>> expanded;
            for (auto& ord : orderings) {
                std::vector<TimeEntry> block(ord.begin() + long(i), ord.begin() + long(j));
                std::sort(block.begin(), block.end(), by_detector);
                do {
                    auto copy = ord;
                    std::copy(block.begin(), block.end(), copy.begin() + long(i));
                    expanded.push_back(copy);
                } while (std::next_permutation(block.begin(), block.end(), by_detector));
            }
            orderings = std::move(expanded);
        }
        i = j;
    }
    return orderings;
}

// Evaluates the trace formula for time-sorted entries. Groups of exactly
// coincident times are averaged over their insertion orders.
double ExactEngine::pointwise_kernel(std::vector<TimeEntry> sorted, const Vector& v0) const {
    const std::size_t n = sorted.size();
    const auto orderings = coincidence_orderings(sorted);

    Complex acc = 0;
    for (const auto& ord : orderings) {
        Vector v = v0;
        double t_prev = 0.0;
        for (const auto& e : ord) {
            v = prop_.apply(e.time - t_prev, v);
            v = insertions_[std::size_t(e.detector)] * v;
            t_prev = e.time;
        }
        acc += trace_of_vec(v);
    }
    acc /= double(orderings.size());
    const double scale = std::pow(2.0, -double(n));
    const Complex value = scale * acc;
    if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value.real()))) {
        throw NumericError("pointwise correlator: imaginary residue " +
                           std::to_string(value.imag()));
    }
    return value.real();
}

double ExactEngine::pointwise(const std::vector<TimeEntry>& entries,
                              const InitialState& rho0) const {
    if (entries.empty()) throw std::invalid_argument("pointwise: need N >= 1 entries");
    for (const auto& e : entries) {
        if (e.detector < 0 || e.detector >= int(model_.channels.size())) {
            throw std::invalid_argument("pointwise: detector index out of range");
        }
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            if (entries[i].detector == entries[j].detector &&
                entries[i].time == entries[j].time) {
                throw std::invalid_argument(
                    "distributional coincidence: use smoothed correlator");
            }
        }
    }
    std::vector<TimeEntry> sorted = entries;
    std::sort(sorted.begin(), sorted.end(),
              [](const TimeEntry& a, const TimeEntry& b) { return a.time < b.time; });
    if (rho0.is_stationary()) {
        // Only time differences matter; shift so the first insertion is at 0.
        const double t0 = sorted.front().time;
        for (auto& e : sorted) e.time -= t0;
    } else if (sorted.front().time < 0) {
        throw std::invalid_argument("pointwise: time points must be >= 0");
    }
    return pointwise_kernel(std::move(sorted), initial_vec(rho0));
}

namespace {

// Nested adaptive quadrature: integrates dimension `level` with the earlier
// times fixed. Tolerance is split between the local quadrature and the
// remaining inner levels.
struct NestedIntegrator {
    const std::vector<FilterEntry>* entries;
    const ExactEngine* engine;
    Vector v0;
    std::vector<double> lo, hi;

    double integrate(std::size_t level, std::vector<double>& times, double tol) const {
        const auto& f = (*entries)[level].f;
        auto integrand = [&](double u) -> double {
            const double fu = f(u);
            if (fu == 0.0) return 0.0;
            times[level] = u;
            if (level + 1 < entries->size()) {
                // The inner value is multiplied by f and integrated, so an
                // inner error delta contributes at most delta * mass(f) here.
                // Keeping it at 10% of the local budget leaves the outer
                // quadrature a smooth integrand to refine against.
                const double inner_tol = 0.1 * tol / std::max(1e-12, f.mass());
                return fu * integrate(level + 1, times, inner_tol);
            }
            return fu * kernel(times);
        };
        // Split at the already-fixed time points: the sorted-time kernel has
        // kinks across coincidence hyperplanes.
        std::vector<double> cuts;
        cuts.push_back(lo[level]);
        for (std::size_t j = 0; j < level; ++j) {
            if (times[j] > lo[level] && times[j] < hi[level]) cuts.push_back(times[j]);
        }
        cuts.push_back(hi[level]);
        std::sort(cuts.begin(), cuts.end());
        double acc = 0.0;
        QuadOptions opt;
        opt.tol = tol / (2.0 * double(cuts.size() - 1));
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            acc += quad(integrand, cuts[s], cuts[s + 1], opt);
        }
        return acc;
    }

    double kernel(const std::vector<double>& times) const {
        std::vector<TimeEntry> pts(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            pts[i] = {(*entries)[i].detector, times[i]};
        }
        std::sort(pts.begin(), pts.end(),
                  [](const TimeEntry& a, const TimeEntry& b) { return a.time < b.time; });
        return engine->kernel_at(pts, v0);
    }
};

}  // namespace

double ExactEngine::smoothed(const std::vector<FilterEntry>& entries,
                             const InitialState& rho0, double tol) const {
    const std::size_t n = entries.size();
    if (n == 0) throw std::invalid_argument("smoothed: need N >= 1 entries");
    if (n > kMaxFilteredOrder) {
        throw std::invalid_argument(
            "smoothed: N > 4 refused (cost grows exponentially with N)");
    }
    for (const auto& e : entries) {
        if (e.detector < 0 || e.detector >= int(model_.channels.size())) {
            throw std::invalid_argument("smoothed: detector index out of range");
        }
    }

    std::vector<FilterEntry> work = entries;
    if (rho0.is_stationary()) {
        // The stationary correlator is shift invariant; move every support to
        // non-negative times.
        double min_lo = work[0].f.support_lo();
        for (const auto& e : work) min_lo = std::min(min_lo, e.f.support_lo());
        if (min_lo < 0) {
            for (auto& e : work) e.f = e.f.shifted(-min_lo);
        }
    }

    if (rho0.is_stationary() && n == 2) return smoothed_stationary_pair(work, tol);

    const Vector v0 = initial_vec(rho0);
    NestedIntegrator ni;
    ni.entries = &work;
    ni.engine = this;
    ni.v0 = v0;
    ni.lo.resize(n);
    ni.hi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ni.lo[i] = std::max(work[i].f.support_lo(), 0.0);
        ni.hi[i] = work[i].f.support_hi();
        if (ni.hi[i] <= ni.lo[i]) return 0.0;  // support entirely before t = 0
    }
    std::vector<double> times(n, 0.0);
    return ni.integrate(0, times, tol);
}

// Fast path for the stationary two-point case: the kernel depends only on
// the separation s, so the double integral collapses to a single integral of
// the filter cross-correlation against the kernel.
double ExactEngine::smoothed_stationary_pair(const std::vector<FilterEntry>& entries,
                                             double tol) const {
    const auto& e1 = entries[0];
    const auto& e2 = entries[1];
    const Vector v0 = vec(stationary());

    auto kernel_sep = [&](double s) -> double {
        // s = (time of entry 2) - (time of entry 1)
        double sep = s;
        if (sep == 0.0) {
            return 0.5 * (kernel_sep_impl(1e-12, v0, e1.detector, e2.detector) +
                          kernel_sep_impl(-1e-12, v0, e1.detector, e2.detector));
        }
        return kernel_sep_impl(sep, v0, e1.detector, e2.detector);
    };

    const double s_lo = e2.f.support_lo() - e1.f.support_hi();
    const double s_hi = e2.f.support_hi() - e1.f.support_lo();
    if (s_lo >= s_hi) return 0.0;

    auto integrand = [&](double s) -> double {
        const double x = overlap(e1.f, e2.f.shifted(-s));
        if (x == 0.0) return 0.0;
        return x * kernel_sep(s);
    };
    QuadOptions opt;
    opt.tol = tol / 2.0;
    double acc = 0.0;
    if (s_lo < 0.0 && s_hi > 0.0) {
        opt.tol = tol / 4.0;
        acc = quad(integrand, s_lo, 0.0, opt) + quad(integrand, 0.0, s_hi, opt);
    } else {
        acc = quad(integrand, s_lo, s_hi, opt);
    }
    return acc;
}

double ExactEngine::kernel_sep_impl(double sep, const Vector& v0, int det1, int det2) const {
    Vector v = v0;
    if (sep >= 0) {
        v = insertions_[std::size_t(det1)] * v;
        v = prop_.apply(sep, v);
        v = insertions_[std::size_t(det2)] * v;
    } else {
        v = insertions_[std::size_t(det2)] * v;
        v = prop_.apply(-sep, v);
        v = insertions_[std::size_t(det1)] * v;
    }
    const Complex value = 0.25 * trace_of_vec(v);
    if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value.real()))) {
        throw NumericError("correlator kernel: imaginary residue");
    }
    return value.real();
}

double ExactEngine::kernel_at(const std::vector<TimeEntry>& sorted, const Vector& v0) const {
    return pointwise_kernel(sorted, v0);
}

double equal_point_term(const SystemModel& model, const std::vector<FilterEntry>& entries,
                        const std::vector<int>& subset, const Pairing& pairing) {
    double prod = 1.0;
    for (const auto& [p, q] : pairing) {
        const auto& a = entries[std::size_t(subset[std::size_t(p)])];
        const auto& b = entries[std::size_t(subset[std::size_t(q)])];
        if (a.detector != b.detector) return 0.0;  // Kronecker delta
        const double eta = model.channels[std::size_t(a.detector)].eta;
        prod *= overlap(a.f, b.f) / (4.0 * eta);
    }
    return prod;
}

double ExactEngine::full(const std::vector<FilterEntry>& entries, const InitialState& rho0,
                         double tol) const {
    const int n = int(entries.size());
    if (n == 0) throw std::invalid_argument("full: need N >= 1 entries");
    double total = smoothed(entries, rho0, tol);
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        const int bits = std::popcount(mask);
        if (bits < 2 || bits % 2 != 0) continue;
        std::vector<int> subset, rest;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) subset.push_back(i);
            else rest.push_back(i);
        }
        // Skip subsets that cannot contract: every pairing needs matching
        // detectors, so a subset whose detectors cannot be matched in pairs
        // contributes nothing.
        double contraction_sum = 0.0;
        for (const auto& P : pairings(bits / 2)) {
            contraction_sum += equal_point_term(model_, entries, subset, P);
        }
        if (contraction_sum == 0.0) continue;
        double rest_value = 1.0;
        if (!rest.empty()) {
            std::vector<FilterEntry> rest_entries;
            for (int i : rest) rest_entries.push_back(entries[std::size_t(i)]);
            rest_value = smoothed(rest_entries, rho0, tol);
        }
        total += contraction_sum * rest_value;
    }
    return total;
}

}  // namespace sigcorr
