#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "satpipe/dbn.hpp"
#include "satpipe/sdae.hpp"

namespace satpipe {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SdaeConfig& config);

/// Versioned JSON document: kind, input kind, layer widths, every matrix at
/// full precision (row-major), training config and seed.
nlohmann::json model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const nlohmann::json& j);

void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

/// Canonical serialized bytes; equal models give equal strings.
std::string serialize_model(const ClassifierModel& model);

}  // namespace satpipe
