#include "sigcorr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace sigcorr {

namespace {

std::pair<double, double> mean_and_stderr(const std::vector<double>& xs) {
    const auto n = double(xs.size());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace

EstimateWithError ensemble_estimate(const SystemModel& model,
                                    const std::vector<FilterEntry>& entries,
                                    const InitialState& rho0, int M, double dt,
                                    std::uint64_t seed, int n_threads) {
    if (M < 2) throw std::invalid_argument("ensemble_estimate: need M >= 2");
    if (entries.empty()) throw std::invalid_argument("ensemble_estimate: need N >= 1 entries");

    std::vector<FilterEntry> work = entries;
    Matrix start;
    if (rho0.is_stationary()) {
        start = stationary_state(model);
        double min_lo = work[0].f.support_lo();
        for (const auto& e : work) min_lo = std::min(min_lo, e.f.support_lo());
        if (min_lo < 0) {
            for (auto& e : work) e.f = e.f.shifted(-min_lo);
        }
    } else {
        start = rho0.density_matrix();
        for (const auto& e : work) {
            if (e.f.support_lo() < -1e-9) {
                throw std::invalid_argument(
                    "ensemble_estimate: filter support starts before t = 0");
            }
        }
    }
    double T = 0;
    for (const auto& e : work) T = std::max(T, e.f.support_hi());
    const long n_steps = std::max<long>(1, std::lround(T / dt) + 1);
    T = double(n_steps) * dt;

    std::vector<double> products(static_cast<std::size_t>(M), 0.0);
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run_range = [&](int m_begin, int m_end) {
        for (int m = m_begin; m < m_end; ++m) {
            const std::uint64_t traj_seed = derive_seed(seed, std::uint64_t(m));
            try {
                Trajectory traj = simulate(model, start, dt, T, traj_seed);
                double prod = 1.0;
                for (const auto& e : work) {
                    prod *= apply_filter(e.f, 0.0, dt,
                                         std::span<const double>(
                                             traj.dr[std::size_t(e.detector)]));
                }
                products[std::size_t(m)] = prod;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::make_exception_ptr(NumericError(
                        std::string("ensemble_estimate: trajectory with seed ") +
                        std::to_string(traj_seed) + " failed: " + e.what()));
                }
                return;
            }
        }
    };

    int workers = n_threads > 0 ? n_threads
                                : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, M);
    if (workers <= 1) {
        run_range(0, M);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (M + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int b = w * chunk, e = std::min(M, b + chunk);
            if (b < e) pool.emplace_back(run_range, b, e);
        }
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    auto [mean, se] = mean_and_stderr(products);
    return {mean, se, M};
}

std::vector<LagEstimate> ergodic_estimate(const SystemModel& model, int detector_a,
                                          int detector_b, double lambda,
                                          const std::vector<double>& lags,
                                          double T_total, const ErgodicOptions& opt) {
    if (lags.empty()) throw std::invalid_argument("ergodic_estimate: empty lag grid");
    const int nch = int(model.channels.size());
    if (detector_a < 0 || detector_a >= nch || detector_b < 0 || detector_b >= nch) {
        throw std::invalid_argument("ergodic_estimate: detector index out of range");
    }
    const Matrix rho_ss = stationary_state(model);  // refuses non-unique states

    const double dt = opt.dt;
    const double support = 28.0 / lambda;
    const double stride = opt.sample_stride > 0 ? opt.sample_stride : support;
    const double min_lag = *std::min_element(lags.begin(), lags.end());
    const double max_lag = *std::max_element(lags.begin(), lags.end());
    const double t_start = opt.burn_in + support + std::max(0.0, -min_lag);
    const double t_end = T_total - std::max(0.0, max_lag) - dt;
    const long n_samples = long(std::floor((t_end - t_start) / stride)) + 1;
    if (n_samples < 4) {
        throw std::invalid_argument("ergodic_estimate: T_total too short for the lag grid");
    }

    // Steps at which the filtered signals must be latched.
    const long n_steps = std::lround(T_total / dt);
    std::vector<long> needed;
    needed.reserve(std::size_t(n_samples) * (lags.size() + 1));
    auto step_of = [&](double t) { return std::lround(t / dt); };
    for (long i = 0; i < n_samples; ++i) {
        const double t_i = t_start + double(i) * stride;
        needed.push_back(step_of(t_i));
        for (double lag : lags) needed.push_back(step_of(t_i + lag));
    }
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    if (needed.back() >= n_steps) {
        throw std::invalid_argument("ergodic_estimate: sample beyond trajectory end");
    }

    std::unordered_map<long, std::pair<double, double>> latched;
    latched.reserve(needed.size() * 2);
    const double decay = std::exp(-lambda * dt);
    double ya = 0.0, yb = 0.0;
    std::size_t next = 0;
    simulate_stream(model, rho_ss, dt, n_steps, opt.seed,
                    [&](long step, std::span<const double> dr) {
                        ya = ya * decay + lambda * dr[std::size_t(detector_a)];
                        yb = yb * decay + lambda * dr[std::size_t(detector_b)];
                        if (next < needed.size() && needed[next] == step) {
                            latched.emplace(step, std::make_pair(ya, yb));
                            ++next;
                        }
                    });

    // Batch means with ~sqrt(T) batches: filtered signals are autocorrelated,
    // a naive iid standard error would be invalid.
    const long n_batches = std::max<long>(2, std::lround(std::sqrt(T_total)));
    std::vector<LagEstimate> curve;
    curve.reserve(lags.size());
    for (double lag : lags) {
        std::vector<double> batch_sum(std::size_t(n_batches), 0.0);
        std::vector<long> batch_count(std::size_t(n_batches), 0);
        for (long i = 0; i < n_samples; ++i) {
            const double t_i = t_start + double(i) * stride;
            const double sample = latched.at(step_of(t_i + lag)).first *
                                  latched.at(step_of(t_i)).second;
            const auto b = std::size_t(i * n_batches / n_samples);
            batch_sum[b] += sample;
            batch_count[b] += 1;
        }
        std::vector<double> means;
        for (std::size_t b = 0; b < std::size_t(n_batches); ++b) {
            if (batch_count[b] > 0) means.push_back(batch_sum[b] / double(batch_count[b]));
        }
        auto [mean, se] = mean_and_stderr(means);
        curve.push_back({lag, {mean, se, n_samples}});
    }
    return curve;
}

double povm_oracle(const SystemModel& model, const std::vector<TimeEntry>& entries,
                   const InitialState& rho0, double delta) {
    model.validate();
    if (entries.empty()) throw std::invalid_argument("povm_oracle: need N >= 1 entries");
    if (delta <= 0) throw std::invalid_argument("povm_oracle: delta must be > 0");
    for (const auto& e : entries) {
        if (e.detector < 0 || e.detector >= int(model.channels.size())) {
            throw std::invalid_argument("povm_oracle: detector index out of range");
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

    // Outcome-summed +/- measurement superoperators, divided by delta.
    const Matrix id = Matrix::Identity(model.dim, model.dim);
    std::vector<Matrix> povm_ins;
    for (const auto& ch : model.channels) {
        const double norm = std::sqrt(ch.c.squaredNorm());
        if (delta * norm > 0.3) {
            std::cerr << "povm_oracle: warning: delta*||c|| = " << delta * norm
                      << " > 0.3 for channel '" << ch.label
                      << "', measurement far from isometric\n";
        }
        Matrix half = 0.5 * delta * delta * (ch.c.adjoint() * ch.c);
        Matrix Mp = (id + delta * ch.c - half) / std::sqrt(2.0);
        Matrix Mm = (id - delta * ch.c - half) / std::sqrt(2.0);
        povm_ins.push_back(
            (kron(Mp.conjugate(), Mp) - kron(Mm.conjugate(), Mm)) / delta);
    }

    std::vector<TimeEntry> sorted = entries;
    std::sort(sorted.begin(), sorted.end(),
              [](const TimeEntry& a, const TimeEntry& b) { return a.time < b.time; });
    Matrix start;
    if (rho0.is_stationary()) {
        start = stationary_state(model);
        const double t0 = sorted.front().time;
        for (auto& e : sorted) e.time -= t0;
    } else {
        start = rho0.density_matrix();
        if (sorted.front().time < 0) {
            throw std::invalid_argument("povm_oracle: time points must be >= 0");
        }
    }

    PropagatorCache prop(averaged_generator(model));
    const Vector v0 = vec(start);
    Complex acc = 0;
    const auto orderings = coincidence_orderings(sorted);
    for (const auto& ord : orderings) {
        Vector v = v0;
        double t_prev = 0.0;
        for (const auto& e : ord) {
            v = prop.apply(e.time - t_prev, v);
            v = povm_ins[std::size_t(e.detector)] * v;
            t_prev = e.time;
        }
        acc += trace_of_vec(v);
    }
    acc /= double(orderings.size());
    const Complex value = std::pow(2.0, -double(entries.size())) * acc;
    if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value.real()))) {
        throw NumericError("povm_oracle: imaginary residue");
    }
    return value.real();
}

void write_estimates_csv(const std::vector<LagEstimate>& curve,
                         const std::string& header_comment, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "lag,value,stderr,n\n";
    out.precision(17);
    for (const auto& p : curve) {
        out << p.lag << "," << p.est.value << "," << p.est.stderr_ << ","
            << p.est.n_samples << "\n";
    }
}

}  // namespace sigcorr
