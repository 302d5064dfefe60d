#pragma once

// JSON (de)serialization of SystemModel. Complex matrices are nested arrays
// of [re, im] pairs; unknown keys are rejected.

#include "sigcorr/model.hpp"

#include <json.hpp>

#include <string>

namespace sigcorr {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json model_to_json(const SystemModel& model);
SystemModel model_from_json(const nlohmann::json& j);

SystemModel load_model_file(const std::string& path);

// FNV-1a hash of the canonical serialization, hex-encoded. Used in CSV
// headers so outputs can be traced back to a model file.
std::string model_hash(const SystemModel& model);

}  // namespace sigcorr
