#include "satpipe/model_io.hpp"

#include <fstream>

#include "satpipe/errors.hpp"

namespace satpipe {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw FormatError("matrix data length mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json to_json(const TrainConfig& c) {
  return {{"layer_sizes", c.layer_sizes},
          {"cd_steps", c.cd_steps},
          {"rbm_learning_rate", c.rbm_learning_rate},
          {"rbm_epochs", c.rbm_epochs},
          {"initial_momentum", c.initial_momentum},
          {"final_momentum", c.final_momentum},
          {"momentum_switch_epoch", c.momentum_switch_epoch},
          {"batch_size", c.batch_size},
          {"finetune_learning_rate", c.finetune_learning_rate},
          {"finetune_momentum", c.finetune_momentum},
          {"max_finetune_epochs", c.max_finetune_epochs},
          {"l2_coefficient", c.l2_coefficient},
          {"validation_fraction", c.validation_fraction},
          {"early_stopping_patience", c.early_stopping_patience},
          {"rbm_init_std", c.rbm_init_std},
          {"head_init_std", c.head_init_std},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  c.cd_steps = j.at("cd_steps").get<int>();
  c.rbm_learning_rate = j.at("rbm_learning_rate").get<double>();
  c.rbm_epochs = j.at("rbm_epochs").get<int>();
  c.initial_momentum = j.at("initial_momentum").get<double>();
  c.final_momentum = j.at("final_momentum").get<double>();
  c.momentum_switch_epoch = j.at("momentum_switch_epoch").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.finetune_learning_rate = j.at("finetune_learning_rate").get<double>();
  c.finetune_momentum = j.at("finetune_momentum").get<double>();
  c.max_finetune_epochs = j.at("max_finetune_epochs").get<int>();
  c.l2_coefficient = j.at("l2_coefficient").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.early_stopping_patience = j.at("early_stopping_patience").get<int>();
  c.rbm_init_std = j.at("rbm_init_std").get<double>();
  c.head_init_std = j.at("head_init_std").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json to_json(const SdaeConfig& c) {
  return {{"layer_sizes", c.layer_sizes}, {"corruption_fraction", c.corruption_fraction},
          {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"epochs", c.epochs},           {"finetune", to_json(c.finetune)},
          {"seed", c.seed}};
}

json model_to_json(const ClassifierModel& model) {
  json layers = json::array();
  for (const auto& l : model.network.layers) layers.push_back({{"weights", matrix_json(l.weights)}, {"bias", vector_json(l.bias)}});
  json j = {{"format", "satpipe-model"},
            {"version", kModelFormatVersion},
            {"kind", to_string(model.kind)},
            {"input_kind", to_string(model.input_kind)},
            {"class_count", model.class_count},
            {"layer_widths", model.layer_widths()},
            {"seed", model.config.seed},
            {"config", to_json(model.config)},
            {"layers", std::move(layers)}};
  if (model.normalization) {
    j["normalization"] = {{"min", vector_json(model.normalization->min)}, {"max", vector_json(model.normalization->max)}};
  } else {
    j["normalization"] = nullptr;
  }
  return j;
}

ClassifierModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "satpipe-model") throw FormatError("not a satpipe model document");
    if (j.at("version").get<int>() != kModelFormatVersion) throw FormatError("unsupported model version");
    ClassifierModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.input_kind = input_kind_from_string(j.at("input_kind").get<std::string>());
    m.class_count = j.at("class_count").get<int>();
    m.config = train_config_from_json(j.at("config"));
    for (const auto& l : j.at("layers")) m.network.layers.push_back({matrix_from(l.at("weights")), vector_from(l.at("bias"))});
    if (m.network.layers.empty()) throw FormatError("model has no layers");
    for (std::size_t i = 1; i < m.network.layers.size(); ++i)
      if (m.network.layers[i].inputs() != m.network.layers[i - 1].outputs()) throw FormatError("layer widths do not chain");
    if (m.network.outputs() != m.class_count) throw FormatError("head width differs from class count");
    if (!j.at("normalization").is_null())
      m.normalization = NormalizationStats{vector_from(j["normalization"].at("min")), vector_from(j["normalization"].at("max"))};
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
}

std::string serialize_model(const ClassifierModel& model) { return model_to_json(model).dump(1); }

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_model(model) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file is not JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace satpipe
