// Command-line front end: exact correlator evaluation, trajectory
// simulation, Monte Carlo estimation, parameter fitting, the POVM
// cross-check, and the packaged two-detector qubit experiment.

#include "sigcorr/calibrate.hpp"
#include "sigcorr/estimators.hpp"
#include "sigcorr/model_io.hpp"
#include "sigcorr/reference.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

using namespace sigcorr;
using nlohmann::json;

namespace {

struct ConvergenceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Overrides {
    std::optional<double> dt;
    std::optional<std::uint64_t> seed;
    std::optional<double> eta;
    std::optional<std::string> out;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--dt", ov.dt, "Override the time step");
    cmd->add_option("--seed", ov.seed, "Override the RNG seed");
    cmd->add_option("--eta", ov.eta, "Override the efficiency of every monitored channel");
    cmd->add_option("--out", ov.out, "Override the output path");
}

std::string timestamp() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + ": expected an object");
    return j;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
        }
    }
}

double need_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw ConfigError(where + ": missing numeric '" + key + "'");
    }
    return j[key].get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError("'" + key + "' must be a number");
    return j[key].get<double>();
}

std::string need_string(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw ConfigError(where + ": missing string '" + key + "'");
    }
    return j[key].get<std::string>();
}

SystemModel load_model(const json& cfg, const std::filesystem::path& config_dir,
                       const Overrides& ov) {
    const std::string rel = need_string(cfg, "model", "config");
    std::filesystem::path p(rel);
    if (p.is_relative() && !std::filesystem::exists(p)) p = config_dir / rel;
    SystemModel model = load_model_file(p.string());
    if (ov.eta) {
        for (auto& ch : model.channels) ch.eta = *ov.eta;
        try {
            model.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--eta override: ") + e.what());
        }
    }
    return model;
}

int detector_from_json(const json& j, const SystemModel& model, const std::string& where) {
    int d = -1;
    if (j.is_number_integer()) {
        d = j.get<int>();
    } else if (j.is_string()) {
        d = model.channel_index(j.get<std::string>());
    } else {
        throw ConfigError(where + ": detector must be an index or a channel label");
    }
    if (d < 0 || d >= int(model.channels.size())) {
        throw ConfigError(where + ": detector index out of range");
    }
    return d;
}

TestFunction filter_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": filter must be an object");
    const std::string kind = need_string(j, "kind", where);
    if (kind == "exponential") {
        reject_unknown(j, {"kind", "center", "lambda"}, where);
        return TestFunction::exponential(need_number(j, "center", where),
                                         need_number(j, "lambda", where));
    }
    if (kind == "box") {
        reject_unknown(j, {"kind", "a", "b", "height"}, where);
        return TestFunction::box(need_number(j, "a", where), need_number(j, "b", where),
                                 number_or(j, "height", 1.0));
    }
    if (kind == "tabulated") {
        reject_unknown(j, {"kind", "grid", "values"}, where);
        if (!j.contains("grid") || !j.contains("values")) {
            throw ConfigError(where + ": tabulated filter needs 'grid' and 'values'");
        }
        return TestFunction::tabulated(j["grid"].get<std::vector<double>>(),
                                       j["values"].get<std::vector<double>>());
    }
    throw ConfigError(where + ": unknown filter kind '" + kind + "'");
}

std::string filter_echo(const TestFunction& f) {
    std::ostringstream s;
    s.precision(12);
    switch (f.kind()) {
        case TestFunction::Kind::Exponential:
            s << "exp[" << f.center() << "|" << f.bandwidth() << "]";
            break;
        case TestFunction::Kind::Box:
            s << "box[" << f.support_lo() << "|" << f.support_hi() << "]";
            break;
        case TestFunction::Kind::Tabulated:
            s << "tab[" << f.support_lo() << "|" << f.support_hi() << "]";
            break;
    }
    return s.str();
}

InitialState initial_state_from_json(const json& cfg, int dim) {
    if (!cfg.contains("initial_state")) return InitialState::stationary();
    const json& j = cfg["initial_state"];
    if (j.is_string()) {
        if (j.get<std::string>() == "stationary") return InitialState::stationary();
        throw ConfigError("initial_state: expected \"stationary\" or a density matrix");
    }
    Matrix rho = matrix_from_json(j, "initial_state");
    if (rho.rows() != dim || rho.cols() != dim) {
        throw ConfigError("initial_state: dimension does not match the model");
    }
    return InitialState::density(std::move(rho));
}

std::vector<double> lag_grid_from_json(const json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object()) {
        reject_unknown(j, {"min", "max", "count"}, "lags");
        const double lo = need_number(j, "min", "lags");
        const double hi = need_number(j, "max", "lags");
        const long n = std::lround(need_number(j, "count", "lags"));
        if (n < 2 || hi <= lo) throw ConfigError("lags: need count >= 2 and max > min");
        std::vector<double> lags(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) {
            lags[std::size_t(i)] = lo + (hi - lo) * double(i) / double(n - 1);
        }
        return lags;
    }
    throw ConfigError("lags: expected an array or a {min, max, count} object");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out.precision(17);
    return out;
}

// ---------------------------------------------------------------- exact ----

int cmd_exact(const std::string& config_path, const Overrides& ov) {
    const json cfg = load_config(config_path);
    reject_unknown(cfg, {"model", "mode", "initial_state", "tol", "out", "evaluations"},
                   "exact config");
    const auto config_dir = std::filesystem::path(config_path).parent_path();
    const SystemModel model = load_model(cfg, config_dir, ov);
    const std::string mode = need_string(cfg, "mode", "exact config");
    if (mode != "pointwise" && mode != "smoothed" && mode != "full") {
        throw ConfigError("exact config: mode must be pointwise | smoothed | full");
    }
    const double tol = number_or(cfg, "tol", 1e-6);
    const std::string out_path = ov.out ? *ov.out : need_string(cfg, "out", "exact config");
    if (!cfg.contains("evaluations") || !cfg["evaluations"].is_array() ||
        cfg["evaluations"].empty()) {
        throw ConfigError("exact config: missing non-empty 'evaluations' array");
    }

    const ExactEngine engine(model);
    const InitialState rho0 = initial_state_from_json(cfg, model.dim);

    struct Row {
        std::string echo;
        double value;
    };
    std::vector<Row> rows;
    for (const auto& eval : cfg["evaluations"]) {
        if (!eval.is_array() || eval.empty()) {
            throw ConfigError("evaluations[]: each evaluation is a non-empty entry array");
        }
        std::ostringstream echo;
        echo.precision(12);
        if (mode == "pointwise") {
            std::vector<TimeEntry> entries;
            for (const auto& e : eval) {
                reject_unknown(e, {"detector", "time"}, "evaluations[] entry");
                const int d = detector_from_json(e.at("detector"), model, "entry");
                const double t = need_number(e, "time", "entry");
                entries.push_back({d, t});
                if (!echo.str().empty()) echo << ";";
                echo << model.channels[std::size_t(d)].label << "@" << t;
            }
            rows.push_back({echo.str(), engine.pointwise(entries, rho0)});
        } else {
            std::vector<FilterEntry> entries;
            for (const auto& e : eval) {
                reject_unknown(e, {"detector", "filter"}, "evaluations[] entry");
                const int d = detector_from_json(e.at("detector"), model, "entry");
                if (!e.contains("filter")) throw ConfigError("entry: missing 'filter'");
                TestFunction f = filter_from_json(e["filter"], "entry.filter");
                if (!echo.str().empty()) echo << ";";
                echo << model.channels[std::size_t(d)].label << "@" << filter_echo(f);
                entries.push_back({d, std::move(f)});
            }
            rows.push_back({echo.str(), mode == "smoothed"
                                            ? engine.smoothed(entries, rho0, tol)
                                            : engine.full(entries, rho0, tol)});
        }
    }

    auto out = open_output(out_path);
    out << "# model=" << model_hash(model) << " mode=" << mode << " tol=" << tol
        << " config=" << std::filesystem::path(config_path).filename().string() << "\n";
    out << "# generated=" << timestamp() << "\n";
    out << "index,spec,value\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << i << "," << rows[i].echo << "," << rows[i].value << "\n";
    }
    std::cout << "exact: wrote " << rows.size() << " values to " << out_path << "\n";
    return 0;
}

// ------------------------------------------------------------- simulate ----

int cmd_simulate(const std::string& config_path, const Overrides& ov) {
    const json cfg = load_config(config_path);
    reject_unknown(cfg,
                   {"model", "initial_state", "dt", "T", "seed", "snapshot_stride",
                    "mode", "out", "snapshots_out"},
                   "simulate config");
    const auto config_dir = std::filesystem::path(config_path).parent_path();
    const SystemModel model = load_model(cfg, config_dir, ov);
    const double dt = ov.dt ? *ov.dt : need_number(cfg, "dt", "simulate config");
    const double T = need_number(cfg, "T", "simulate config");
    const std::uint64_t seed =
        ov.seed ? *ov.seed : std::uint64_t(std::llround(number_or(cfg, "seed", 1.0)));
    const int stride = int(std::lround(number_or(cfg, "snapshot_stride", 0.0)));
    const std::string mode = cfg.contains("mode")
                                 ? need_string(cfg, "mode", "simulate config")
                                 : "nonlinear";
    const std::string out_path =
        ov.out ? *ov.out : need_string(cfg, "out", "simulate config");
    const std::string side_path =
        cfg.contains("snapshots_out") ? need_string(cfg, "snapshots_out", "simulate config")
                                      : "";

    InitialState rho0_spec = initial_state_from_json(cfg, model.dim);
    const Matrix rho0 =
        rho0_spec.is_stationary() ? stationary_state(model) : rho0_spec.density_matrix();

    Trajectory traj;
    if (mode == "nonlinear") {
        traj = simulate(model, rho0, dt, T, seed, stride);
    } else if (mode == "physical-noise") {
        traj = simulate_linear(model, rho0, dt, T, seed, LinearMode::PhysicalNoise, stride);
    } else if (mode == "wiener") {
        traj = simulate_linear(model, rho0, dt, T, seed, LinearMode::WienerDriven, stride);
    } else {
        throw ConfigError("simulate config: mode must be nonlinear | physical-noise | wiener");
    }

    std::vector<std::string> labels;
    for (const auto& ch : model.channels) labels.push_back(ch.label);
    write_trajectory_csv(traj, model_hash(model), labels, out_path, side_path);
    std::cout << "simulate: " << traj.n_steps << " steps to " << out_path;
    if (mode == "nonlinear") {
        std::cout << " (min eigenvalue " << traj.min_eig_observed << ", "
                  << traj.steps_below_tol << " steps below -1e-3)";
    }
    std::cout << "\n";
    return 0;
}

// ------------------------------------------------------------- estimate ----

int cmd_estimate(const std::string& config_path, const Overrides& ov) {
    const json cfg = load_config(config_path);
    const auto config_dir = std::filesystem::path(config_path).parent_path();
    const std::string mode = need_string(cfg, "mode", "estimate config");
    const std::string out_path =
        ov.out ? *ov.out : need_string(cfg, "out", "estimate config");

    if (mode == "ensemble") {
        reject_unknown(cfg,
                       {"model", "mode", "filters", "initial_state", "M", "dt", "seed",
                        "n_threads", "out"},
                       "estimate config");
        const SystemModel model = load_model(cfg, config_dir, ov);
        if (!cfg.contains("filters") || !cfg["filters"].is_array()) {
            throw ConfigError("estimate config: missing 'filters' array");
        }
        std::vector<FilterEntry> entries;
        std::ostringstream echo;
        echo.precision(12);
        for (const auto& e : cfg["filters"]) {
            reject_unknown(e, {"detector", "filter"}, "filters[]");
            const int d = detector_from_json(e.at("detector"), model, "filters[]");
            TestFunction f = filter_from_json(e.at("filter"), "filters[].filter");
            if (!echo.str().empty()) echo << ";";
            echo << model.channels[std::size_t(d)].label << "@" << filter_echo(f);
            entries.push_back({d, std::move(f)});
        }
        const int M = int(std::lround(need_number(cfg, "M", "estimate config")));
        const double dt = ov.dt ? *ov.dt : number_or(cfg, "dt", 1e-3);
        const std::uint64_t seed =
            ov.seed ? *ov.seed : std::uint64_t(std::llround(number_or(cfg, "seed", 1.0)));
        const int n_threads = int(std::lround(number_or(cfg, "n_threads", 0.0)));
        auto est = ensemble_estimate(model, entries, initial_state_from_json(cfg, model.dim),
                                     M, dt, seed, n_threads);
        auto out = open_output(out_path);
        out << "# model=" << model_hash(model) << " mode=ensemble M=" << M << " dt=" << dt
            << " seed=" << seed << " spec=" << echo.str() << "\n";
        out << "# generated=" << timestamp() << "\n";
        out << "value,stderr,n\n";
        out << est.value << "," << est.stderr_ << "," << est.n_samples << "\n";
        std::cout << "estimate: " << est.value << " +- " << est.stderr_ << " (" << M
                  << " trajectories) to " << out_path << "\n";
        return 0;
    }
    if (mode == "ergodic") {
        reject_unknown(cfg,
                       {"model", "mode", "detector_a", "detector_b", "lambda", "lags",
                        "T_total", "dt", "burn_in", "sample_stride", "seed", "out"},
                       "estimate config");
        const SystemModel model = load_model(cfg, config_dir, ov);
        if (!cfg.contains("detector_a") || !cfg.contains("detector_b")) {
            throw ConfigError("estimate config: missing 'detector_a' / 'detector_b'");
        }
        const int da = detector_from_json(cfg["detector_a"], model, "detector_a");
        const int db = detector_from_json(cfg["detector_b"], model, "detector_b");
        const double lambda = need_number(cfg, "lambda", "estimate config");
        if (!cfg.contains("lags")) throw ConfigError("estimate config: missing 'lags'");
        const auto lags = lag_grid_from_json(cfg["lags"]);
        const double T_total = need_number(cfg, "T_total", "estimate config");
        ErgodicOptions opt;
        opt.dt = ov.dt ? *ov.dt : number_or(cfg, "dt", opt.dt);
        opt.burn_in = number_or(cfg, "burn_in", opt.burn_in);
        opt.sample_stride = number_or(cfg, "sample_stride", opt.sample_stride);
        opt.seed = ov.seed ? *ov.seed
                           : std::uint64_t(std::llround(number_or(cfg, "seed", 1.0)));
        auto curve = ergodic_estimate(model, da, db, lambda, lags, T_total, opt);
        std::ostringstream hdr;
        hdr.precision(17);
        hdr << "model=" << model_hash(model) << " mode=ergodic detector_a=" << da
            << " detector_b=" << db << " lambda=" << lambda << " T=" << T_total
            << " dt=" << opt.dt << " seed=" << opt.seed << "\n# generated=" << timestamp();
        write_estimates_csv(curve, hdr.str(), out_path);
        std::cout << "estimate: " << curve.size() << " lags to " << out_path << "\n";
        return 0;
    }
    throw ConfigError("estimate config: mode must be ensemble | ergodic");
}

// ------------------------------------------------------------------ fit ----

double QubitExampleParams::* qubit_field(const std::string& name) {
    if (name == "gamma_x") return &QubitExampleParams::gamma_x;
    if (name == "gamma_minus") return &QubitExampleParams::gamma_minus;
    if (name == "eta_x") return &QubitExampleParams::eta_x;
    if (name == "eta_minus") return &QubitExampleParams::eta_minus;
    throw ConfigError("fit config: unknown qubit parameter '" + name + "'");
}

int cmd_fit(const std::string& config_path, const Overrides& ov) {
    const json cfg = load_config(config_path);
    reject_unknown(cfg,
                   {"family", "fixed", "parameters", "observations", "tol", "budget",
                    "out"},
                   "fit config");
    const std::string family = cfg.contains("family")
                                   ? need_string(cfg, "family", "fit config")
                                   : "qubit";
    if (family != "qubit") {
        throw ConfigError("fit config: only the 'qubit' model family is built in");
    }
    QubitExampleParams fixed;
    if (cfg.contains("fixed")) {
        for (auto it = cfg["fixed"].begin(); it != cfg["fixed"].end(); ++it) {
            if (!it.value().is_number()) throw ConfigError("fit config: fixed values are numbers");
            fixed.*qubit_field(it.key()) = it.value().get<double>();
        }
    }

    FitProblem problem;
    if (!cfg.contains("parameters") || !cfg["parameters"].is_array()) {
        throw ConfigError("fit config: missing 'parameters' array");
    }
    std::vector<double QubitExampleParams::*> fields;
    for (const auto& p : cfg["parameters"]) {
        reject_unknown(p, {"name", "lower", "upper", "initial"}, "parameters[]");
        FitParameter fp;
        fp.name = need_string(p, "name", "parameters[]");
        fields.push_back(qubit_field(fp.name));
        fp.lower = need_number(p, "lower", "parameters[]");
        fp.upper = need_number(p, "upper", "parameters[]");
        fp.initial = number_or(p, "initial", 0.5 * (fp.lower + fp.upper));
        problem.parameters.push_back(std::move(fp));
    }
    problem.build = [fixed, fields](const std::vector<double>& v) {
        QubitExampleParams q = fixed;
        for (std::size_t i = 0; i < fields.size(); ++i) q.*fields[i] = v[i];
        return make_qubit_model(q);
    };
    const auto config_dir = std::filesystem::path(config_path).parent_path();
    std::filesystem::path obs_path(need_string(cfg, "observations", "fit config"));
    if (obs_path.is_relative() && !std::filesystem::exists(obs_path)) {
        obs_path = config_dir / obs_path;
    }
    problem.observations = load_observations_csv(obs_path.string());
    problem.prediction_tol = number_or(cfg, "tol", 1e-6);
    const long budget = std::lround(number_or(cfg, "budget", 2000.0));

    const FitResult result = fit(problem, budget);

    json out_json;
    out_json["residual"] = result.residual;
    out_json["converged"] = result.converged;
    out_json["evaluations"] = result.evaluations;
    out_json["estimates"] = json::object();
    out_json["identifiable"] = json::object();
    out_json["sensitivity"] = json::object();
    for (std::size_t i = 0; i < problem.parameters.size(); ++i) {
        const auto& name = problem.parameters[i].name;
        out_json["estimates"][name] = result.estimates[i];
        out_json["identifiable"][name] = bool(result.identifiable[i]);
        out_json["sensitivity"][name] = result.sensitivity[i];
    }
    const std::string dump = out_json.dump(2);
    if (ov.out || cfg.contains("out")) {
        const std::string out_path =
            ov.out ? *ov.out : need_string(cfg, "out", "fit config");
        auto out = open_output(out_path);
        out << dump << "\n";
        std::cout << "fit: wrote " << out_path << "\n";
    } else {
        std::cout << dump << "\n";
    }
    if (!result.converged) {
        throw ConvergenceFailure("fit did not converge within the evaluation budget");
    }
    return 0;
}

// ----------------------------------------------------------- povm-check ----

int cmd_povm_check(const std::string& config_path, const Overrides& ov) {
    const json cfg = load_config(config_path);
    reject_unknown(cfg, {"model", "entries", "initial_state", "deltas", "out"},
                   "povm config");
    const auto config_dir = std::filesystem::path(config_path).parent_path();
    const SystemModel model = load_model(cfg, config_dir, ov);
    if (!cfg.contains("entries") || !cfg["entries"].is_array() || cfg["entries"].empty()) {
        throw ConfigError("povm config: missing non-empty 'entries' array");
    }
    std::vector<TimeEntry> entries;
    for (const auto& e : cfg["entries"]) {
        reject_unknown(e, {"detector", "time"}, "entries[]");
        entries.push_back({detector_from_json(e.at("detector"), model, "entries[]"),
                           need_number(e, "time", "entries[]")});
    }
    std::vector<double> deltas = {0.2, 0.1, 0.05, 0.025};
    if (cfg.contains("deltas")) deltas = cfg["deltas"].get<std::vector<double>>();
    if (deltas.size() < 2) throw ConfigError("povm config: need at least two deltas");
    std::sort(deltas.rbegin(), deltas.rend());

    const ExactEngine engine(model);
    const InitialState rho0 = initial_state_from_json(cfg, model.dim);
    const double exact = engine.pointwise(entries, rho0);
    std::vector<double> values, errs;
    for (double d : deltas) {
        values.push_back(povm_oracle(model, entries, rho0, d));
        errs.push_back(std::abs(values.back() - exact));
    }
    const std::size_t last = deltas.size() - 1;
    const double slope = std::log(errs[last - 1] / errs[last]) /
                         std::log(deltas[last - 1] / deltas[last]);

    const std::string out_path =
        ov.out ? *ov.out : need_string(cfg, "out", "povm config");
    auto out = open_output(out_path);
    out << "# model=" << model_hash(model) << " exact=" << exact
        << " final_slope=" << slope << "\n";
    out << "# generated=" << timestamp() << "\n";
    out << "delta,value,abs_error\n";
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        out << deltas[i] << "," << values[i] << "," << errs[i] << "\n";
    }
    std::cout << "povm-check: exact " << exact << ", final log-log slope " << slope
              << " (expect 2) to " << out_path << "\n";
    if (!(slope > 1.8 && slope < 2.2)) {
        throw ConvergenceFailure("povm error does not shrink at order delta^2: slope " +
                                 std::to_string(slope));
    }
    return 0;
}

// ------------------------------------------------------- reproduce-fig1 ----

void write_fig1_plot_script(const std::filesystem::path& dir) {
    auto out = open_output((dir / "plot_fig1.py").string());
    out << "#!/usr/bin/env python3\n"
           "\"\"\"Plot the exact and ergodic correlator curves emitted next to"
           " this script.\"\"\"\n"
           "import csv\n"
           "import pathlib\n"
           "\n"
           "import matplotlib.pyplot as plt\n"
           "\n"
           "HERE = pathlib.Path(__file__).parent\n"
           "\n"
           "\n"
           "def read(name, cols):\n"
           "    rows = []\n"
           "    with open(HERE / name) as fh:\n"
           "        for row in csv.DictReader(r for r in fh if not r.startswith('#')):\n"
           "            rows.append([float(row[c]) for c in cols])\n"
           "    return list(zip(*rows))\n"
           "\n"
           "\n"
           "lag, kxm, kxx = read('fig1_exact.csv', ['lag', 'kxminus', 'kxx'])\n"
           "elag, exm, sxm = read('fig1_ergodic_xminus.csv', ['lag', 'value', 'stderr'])\n"
           "_, exx, sxx = read('fig1_ergodic_xx.csv', ['lag', 'value', 'stderr'])\n"
           "\n"
           "fig, ax = plt.subplots(figsize=(7, 4.5))\n"
           "ax.plot(lag, kxm, 'C0-', label=r'exact $K_{x,-}(f^\\tau, f^0)$')\n"
           "ax.plot(lag, kxx, 'C1-', label=r'exact $K_{x,x}(f^\\tau, f^0)$')\n"
           "ax.errorbar(elag, exm, yerr=sxm, fmt='C0.', ms=4, capsize=2,\n"
           "            label='ergodic estimate')\n"
           "ax.errorbar(elag, exx, yerr=sxx, fmt='C1.', ms=4, capsize=2)\n"
           "ax.set_xlabel(r'lag $\\tau$')\n"
           "ax.set_ylabel('correlator')\n"
           "ax.legend()\n"
           "fig.tight_layout()\n"
           "fig.savefig(HERE / 'fig1.png', dpi=150)\n"
           "print('wrote', HERE / 'fig1.png')\n";
}

int cmd_reproduce_fig1(const std::string& out_dir, const Overrides& ov) {
    // Hard-wired two-detector qubit benchmark: gamma_minus = 1, gamma_x = 0.5,
    // filter bandwidth lambda = 10, one stationary trajectory of length 1e4
    // at dt = 1e-3, lag grid of 61 points in [-3, 3].
    QubitExampleParams p;
    if (ov.eta) p.eta_x = *ov.eta;
    const double lambda = 10.0;
    const double dt = ov.dt ? *ov.dt : 1e-3;
    const double T_total = 1e4;
    const std::uint64_t seed = ov.seed ? *ov.seed : 1;
    const std::filesystem::path dir =
        ov.out ? std::filesystem::path(*ov.out) : std::filesystem::path(out_dir);
    std::filesystem::create_directories(dir);

    const SystemModel model = make_qubit_model(p);
    const ExactEngine engine(model);
    const std::string hash = model_hash(model);

    std::vector<double> lags(61);
    for (int i = 0; i < 61; ++i) lags[std::size_t(i)] = -3.0 + 0.1 * double(i);

    std::cout << "reproduce-fig1: exact curves (61 lags)..." << std::endl;
    std::vector<double> kxm(lags.size()), kxx(lags.size());
    for (std::size_t i = 0; i < lags.size(); ++i) {
        std::vector<FilterEntry> cross = {
            {0, TestFunction::exponential(lags[i], lambda)},
            {1, TestFunction::exponential(0.0, lambda)},
        };
        std::vector<FilterEntry> same = {
            {0, TestFunction::exponential(lags[i], lambda)},
            {0, TestFunction::exponential(0.0, lambda)},
        };
        kxm[i] = engine.full(cross, InitialState::stationary(), 1e-8);
        kxx[i] = engine.full(same, InitialState::stationary(), 1e-8);
    }
    {
        auto out = open_output((dir / "fig1_exact.csv").string());
        out << "# model=" << hash << " lambda=" << lambda << " eta_x=" << p.eta_x
            << " tol=1e-8\n";
        out << "# generated=" << timestamp() << "\n";
        out << "lag,kxminus,kxx\n";
        for (std::size_t i = 0; i < lags.size(); ++i) {
            out << lags[i] << "," << kxm[i] << "," << kxx[i] << "\n";
        }
    }

    ErgodicOptions opt;
    opt.dt = dt;
    opt.seed = seed;
    std::cout << "reproduce-fig1: ergodic K_{x,-} (T = " << T_total << ")..." << std::endl;
    auto curve_xm = ergodic_estimate(model, 0, 1, lambda, lags, T_total, opt);
    opt.seed = derive_seed(seed, 1);
    std::cout << "reproduce-fig1: ergodic K_{x,x} (T = " << T_total << ")..." << std::endl;
    auto curve_xx = ergodic_estimate(model, 0, 0, lambda, lags, T_total, opt);

    std::ostringstream hdr;
    hdr.precision(17);
    hdr << "model=" << hash << " lambda=" << lambda << " T=" << T_total << " dt=" << dt
        << " seed=" << seed << "\n# generated=" << timestamp();
    write_estimates_csv(curve_xm, hdr.str(), (dir / "fig1_ergodic_xminus.csv").string());
    write_estimates_csv(curve_xx, hdr.str(), (dir / "fig1_ergodic_xx.csv").string());
    write_fig1_plot_script(dir);

    // Agreement summary: worst normalized deviation per curve, and the
    // equal-point increment of the same-detector correlator at zero lag.
    double worst_xm = 0, worst_xx = 0;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        worst_xm = std::max(worst_xm,
                            std::abs(curve_xm[i].est.value - kxm[i]) / curve_xm[i].est.stderr_);
        worst_xx = std::max(worst_xx,
                            std::abs(curve_xx[i].est.value - kxx[i]) / curve_xx[i].est.stderr_);
    }
    std::vector<FilterEntry> central = {
        {0, TestFunction::exponential(0.0, lambda)},
        {0, TestFunction::exponential(0.0, lambda)},
    };
    const double increment = engine.full(central, InitialState::stationary(), 1e-8) -
                             engine.smoothed(central, InitialState::stationary(), 1e-8);
    const bool ok = worst_xm < 4.0 && worst_xx < 4.0;
    {
        auto out = open_output((dir / "fig1_summary.txt").string());
        out << "model " << hash << ", eta_x " << p.eta_x << ", seed " << seed
            << ", dt " << dt << ", T " << T_total << "\n";
        out << "worst |exact - estimate| / stderr over 61 lags:\n";
        out << "  K_{x,-}: " << worst_xm << "\n";
        out << "  K_{x,x}: " << worst_xx << "\n";
        out << "equal-point increment of K_{x,x} at lag 0: " << increment
            << " (lambda/(8 eta_x) = " << lambda / (8.0 * p.eta_x) << ")\n";
        out << (ok ? "all lags within 4 sigma\n" : "DISAGREEMENT beyond 4 sigma\n");
    }
    std::cout << "reproduce-fig1: worst deviation " << worst_xm << " sigma (K_{x,-}), "
              << worst_xx << " sigma (K_{x,x}); outputs in " << dir.string() << "\n";
    if (!ok) {
        throw ConvergenceFailure("ergodic estimates deviate beyond 4 sigma; see " +
                                 (dir / "fig1_summary.txt").string());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sigcorr: exact and estimated correlators of continuous-measurement signals"};
    app.require_subcommand(1);

    std::string config_path;
    std::string fig1_dir = "fig1_out";
    Overrides ov;

    auto* c_exact = app.add_subcommand("exact", "Evaluate exact correlators from a config");
    c_exact->add_option("config", config_path, "JSON config file")->required();
    add_override_flags(c_exact, ov);

    auto* c_sim = app.add_subcommand("simulate", "Integrate one monitored trajectory");
    c_sim->add_option("config", config_path, "JSON config file")->required();
    add_override_flags(c_sim, ov);

    auto* c_est = app.add_subcommand("estimate", "Monte Carlo correlator estimation");
    c_est->add_option("config", config_path, "JSON config file")->required();
    add_override_flags(c_est, ov);

    auto* c_fit = app.add_subcommand("fit", "Fit qubit parameters to observed curves");
    c_fit->add_option("config", config_path, "JSON config file")->required();
    add_override_flags(c_fit, ov);

    auto* c_povm = app.add_subcommand("povm-check", "Discrete weak-measurement cross-check");
    c_povm->add_option("config", config_path, "JSON config file")->required();
    add_override_flags(c_povm, ov);

    auto* c_fig1 = app.add_subcommand(
        "reproduce-fig1", "Two-detector qubit benchmark: exact vs ergodic curves");
    c_fig1->add_option("out_dir", fig1_dir, "Output directory");
    add_override_flags(c_fig1, ov);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_exact->parsed()) return cmd_exact(config_path, ov);
        if (c_sim->parsed()) return cmd_simulate(config_path, ov);
        if (c_est->parsed()) return cmd_estimate(config_path, ov);
        if (c_fit->parsed()) return cmd_fit(config_path, ov);
        if (c_povm->parsed()) return cmd_povm_check(config_path, ov);
        if (c_fig1->parsed()) return cmd_reproduce_fig1(fig1_dir, ov);
    } catch (const ConvergenceFailure& e) {
        std::cerr << "sigcorr_cli: [convergence] " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "sigcorr_cli: [config] " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "sigcorr_cli: [numeric] " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "sigcorr_cli: [config] " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "sigcorr_cli: [config] " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "sigcorr_cli: [numeric] " << e.what() << "\n";
        return 3;
    }
    return 0;
}
