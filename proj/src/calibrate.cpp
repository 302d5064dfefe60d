#include "sigcorr/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sigcorr {

std::vector<double> predict_curves(const SystemModel& model,
                                   const std::vector<CurveObservation>& observations,
                                   double tol) {
    ExactEngine engine(model);
    std::vector<double> out;
    out.reserve(observations.size());
    for (const auto& obs : observations) {
        std::vector<FilterEntry> entries = {
            {obs.detector_a, TestFunction::exponential(obs.lag, obs.lambda)},
            {obs.detector_b, TestFunction::exponential(0.0, obs.lambda)},
        };
        out.push_back(engine.full(entries, InitialState::stationary(), tol));
    }
    return out;
}

namespace {

struct Objective {
    const FitProblem* problem;
    long evaluations = 0;
    std::map<std::vector<double>, double> cache;

    std::vector<double> unscale(const std::vector<double>& x) const {
        std::vector<double> p(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto& fp = problem->parameters[i];
            const double xi = std::clamp(x[i], 0.0, 1.0);
            p[i] = fp.lower + xi * (fp.upper - fp.lower);
        }
        return p;
    }

    std::vector<double> predictions(const std::vector<double>& x) {
        SystemModel model = problem->build(unscale(x));
        ++evaluations;
        return predict_curves(model, problem->observations, problem->prediction_tol);
    }

    double operator()(const std::vector<double>& x) {
        auto it = cache.find(x);
        if (it != cache.end()) return it->second;
        const auto pred = predictions(x);
        double chi2 = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const auto& obs = problem->observations[i];
            const double r = (obs.value - pred[i]) / obs.stderr_;
            chi2 += obs.weight * r * r;
        }
        cache.emplace(x, chi2);
        return chi2;
    }
};

double simplex_diameter(const std::vector<std::vector<double>>& pts) {
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < pts[i].size(); ++k) {
                s = std::max(s, std::abs(pts[i][k] - pts[j][k]));
            }
            d = std::max(d, s);
        }
    }
    return d;
}

}  // namespace

FitResult fit(const FitProblem& problem, long budget) {
    const std::size_t n = problem.parameters.size();
    if (n == 0) throw std::invalid_argument("fit: no free parameters");
    if (problem.observations.size() < n) {
        throw std::invalid_argument("fit: need at least as many observations as parameters");
    }
    for (const auto& p : problem.parameters) {
        if (!(p.lower < p.upper) || !std::isfinite(p.lower) || !std::isfinite(p.upper)) {
            throw std::invalid_argument("fit: bounds of '" + p.name + "' invalid");
        }
    }

    Objective obj{&problem};
    constexpr double kStallDiameter = 1e-6;

    std::vector<double> x0(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& fp = problem.parameters[i];
        x0[i] = std::clamp((fp.initial - fp.lower) / (fp.upper - fp.lower), 0.0, 1.0);
    }

    auto clamp_point = [](std::vector<double> x) {
        for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
        return x;
    };

    std::vector<double> best_x = x0;
    double best_f = obj(best_x);
    bool converged = false;

    double spread = 0.1;
    const int max_restarts = 4;
    for (int restart = 0; restart <= max_restarts && !converged; ++restart) {
        // initial simplex around the current best point
        std::vector<std::vector<double>> pts(n + 1, best_x);
        for (std::size_t i = 0; i < n; ++i) {
            pts[i + 1][i] = std::clamp(pts[i + 1][i] + spread, 0.0, 1.0);
            if (pts[i + 1][i] == best_x[i]) pts[i + 1][i] = std::max(0.0, best_x[i] - spread);
        }
        std::vector<double> fs(n + 1);
        for (std::size_t i = 0; i <= n; ++i) fs[i] = obj(pts[i]);

        while (obj.evaluations < budget) {
            // sort simplex by objective
            std::vector<std::size_t> order(n + 1);
            for (std::size_t i = 0; i <= n; ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
            {
                std::vector<std::vector<double>> p2;
                std::vector<double> f2;
                for (auto i : order) {
                    p2.push_back(pts[i]);
                    f2.push_back(fs[i]);
                }
                pts = std::move(p2);
                fs = std::move(f2);
            }
            if (simplex_diameter(pts) < kStallDiameter) {
                converged = true;
                break;
            }

            std::vector<double> centroid(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k];
            }
            for (auto& c : centroid) c /= double(n);

            auto affine = [&](double coef) {
                std::vector<double> x(n);
                for (std::size_t k = 0; k < n; ++k) {
                    x[k] = centroid[k] + coef * (centroid[k] - pts[n][k]);
                }
                return clamp_point(std::move(x));
            };

            auto xr = affine(1.0);
            double fr = obj(xr);
            if (fr < fs[0]) {
                auto xe = affine(2.0);
                double fe = obj(xe);
                if (fe < fr) {
                    pts[n] = xe;
                    fs[n] = fe;
                } else {
                    pts[n] = xr;
                    fs[n] = fr;
                }
            } else if (fr < fs[n - 1]) {
                pts[n] = xr;
                fs[n] = fr;
            } else {
                auto xc = affine(fr < fs[n] ? 0.5 : -0.5);
                double fc = obj(xc);
                if (fc < std::min(fr, fs[n])) {
                    pts[n] = xc;
                    fs[n] = fc;
                } else {
                    for (std::size_t i = 1; i <= n; ++i) {
                        for (std::size_t k = 0; k < n; ++k) {
                            pts[i][k] = 0.5 * (pts[i][k] + pts[0][k]);
                        }
                        fs[i] = obj(pts[i]);
                    }
                }
            }
            if (fs[0] < best_f) {
                best_f = fs[0];
                best_x = pts[0];
            }
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (fs[i] < best_f) {
                best_f = fs[i];
                best_x = pts[i];
            }
        }
        spread *= 0.25;  // restart tighter around the incumbent
        if (obj.evaluations >= budget) break;
    }

    FitResult result;
    result.estimates = obj.unscale(best_x);
    result.residual = best_f;
    result.converged = converged;

    // Per-parameter sensitivity: finite differences of the predictions with
    // respect to the scaled parameter. A parameter that moves no prediction
    // is unidentifiable from this data.
    const double h = 0.05;
    for (std::size_t j = 0; j < n; ++j) {
        auto xp = best_x, xm = best_x;
        xp[j] = std::min(1.0, best_x[j] + h);
        xm[j] = std::max(0.0, best_x[j] - h);
        const auto pp = obj.predictions(xp);
        const auto pm = obj.predictions(xm);
        double sens = 0.0;
        const double dx = xp[j] - xm[j];
        for (std::size_t i = 0; i < pp.size(); ++i) {
            sens = std::max(sens, std::abs(pp[i] - pm[i]) / dx);
        }
        result.sensitivity.push_back(sens);
        result.identifiable.push_back(sens > 1e-3);
    }
    result.evaluations = obj.evaluations;
    return result;
}

std::vector<CurveObservation> load_observations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open observations file: " + path);
    std::vector<CurveObservation> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // "detector_a,detector_b,lambda,lag,value,stderr"
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 6) {
            throw std::runtime_error("observations file: expected 6 columns, got line '" +
                                     line + "'");
        }
        CurveObservation obs;
        obs.detector_a = std::stoi(fields[0]);
        obs.detector_b = std::stoi(fields[1]);
        obs.lambda = std::stod(fields[2]);
        obs.lag = std::stod(fields[3]);
        obs.value = std::stod(fields[4]);
        obs.stderr_ = std::stod(fields[5]);
        out.push_back(obs);
    }
    return out;
}

}  // namespace sigcorr
