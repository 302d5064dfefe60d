#include "sigcorr/model_io.hpp"

#include <fstream>
#include <set>

namespace sigcorr {

using nlohmann::json;

nlohmann::json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            row.push_back(json::array({M(r, c).real(), M(r, c).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(what + ": expected a non-empty array of rows");
    }
    const auto nrows = j.size();
    const auto ncols = j[0].is_array() ? j[0].size() : 0;
    if (ncols == 0) throw ConfigError(what + ": rows must be non-empty arrays");
    Matrix M(nrows, ncols);
    for (std::size_t r = 0; r < nrows; ++r) {
        if (!j[r].is_array() || j[r].size() != ncols) {
            throw ConfigError(what + ": ragged rows");
        }
        for (std::size_t c = 0; c < ncols; ++c) {
            const auto& e = j[r][c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                throw ConfigError(what + ": entries must be [re, im] pairs");
            }
            M(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    }
    return M;
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
        }
    }
}

}  // namespace

json model_to_json(const SystemModel& model) {
    json j;
    j["dim"] = model.dim;
    j["hamiltonian"] = matrix_to_json(model.hamiltonian);
    j["decay_channels"] = json::array();
    for (const auto& L : model.decay_channels) j["decay_channels"].push_back(matrix_to_json(L));
    j["channels"] = json::array();
    for (const auto& ch : model.channels) {
        j["channels"].push_back(
            {{"label", ch.label}, {"c", matrix_to_json(ch.c)}, {"eta", ch.eta}});
    }
    return j;
}

SystemModel model_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("model: expected a JSON object");
    reject_unknown_keys(j, {"dim", "hamiltonian", "decay_channels", "channels"}, "model");
    SystemModel model;
    if (!j.contains("dim") || !j["dim"].is_number_integer()) {
        throw ConfigError("model: missing integer 'dim'");
    }
    model.dim = j["dim"].get<int>();
    if (j.contains("hamiltonian")) {
        model.hamiltonian = matrix_from_json(j["hamiltonian"], "model.hamiltonian");
    } else {
        model.hamiltonian = Matrix::Zero(model.dim, model.dim);
    }
    if (j.contains("decay_channels")) {
        for (const auto& L : j["decay_channels"]) {
            model.decay_channels.push_back(matrix_from_json(L, "model.decay_channels[]"));
        }
    }
    if (!j.contains("channels") || !j["channels"].is_array()) {
        throw ConfigError("model: missing 'channels' array");
    }
    for (const auto& c : j["channels"]) {
        reject_unknown_keys(c, {"label", "c", "eta"}, "model.channels[]");
        MeasurementChannel ch;
        if (!c.contains("label") || !c["label"].is_string()) {
            throw ConfigError("model.channels[]: missing string 'label'");
        }
        ch.label = c["label"].get<std::string>();
        if (!c.contains("c")) throw ConfigError("model.channels[]: missing operator 'c'");
        ch.c = matrix_from_json(c["c"], "model.channels[].c");
        if (!c.contains("eta") || !c["eta"].is_number()) {
            throw ConfigError("model.channels[]: missing numeric 'eta'");
        }
        ch.eta = c["eta"].get<double>();
        model.channels.push_back(std::move(ch));
    }
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return model;
}

SystemModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("model file " + path + ": " + e.what());
    }
    return model_from_json(j);
}

std::string model_hash(const SystemModel& model) {
    const std::string canon = model_to_json(model).dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace sigcorr
