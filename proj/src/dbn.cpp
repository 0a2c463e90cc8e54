#include "satpipe/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "satpipe/errors.hpp"
#include "satpipe/random.hpp"

namespace satpipe {

namespace {

std::vector<Eigen::Index> iota_indices(Eigen::Index n) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

void fisher_yates(std::vector<Eigen::Index>& v, Rng& rng) {
  for (std::size_t i = v.size(); i-- > 1;) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(v[i], v[pick(rng)]);
  }
}

double momentum_for(const TrainConfig& c, int epoch) {
  return epoch < c.momentum_switch_epoch ? c.initial_momentum : c.final_momentum;
}

void check_labels(std::span<const int> labels, int class_count) {
  for (int l : labels)
    if (l < 0 || l >= class_count)
      throw LabelError("label " + std::to_string(l) + " outside [0, " + std::to_string(class_count) + ")");
}

int misclassified(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets) {
  int wrong = 0;
  for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
    Eigen::Index truth = 0;
    targets.row(r).maxCoeff(&truth);
    if (argmax(outputs.row(r).transpose()) != truth) ++wrong;
  }
  return wrong;
}

}  // namespace

void TrainConfig::validate() const {
  for (int w : layer_sizes)
    if (w < 1) throw ConfigError("layer sizes must be positive");
  if (cd_steps < 1) throw ConfigError("cd_steps must be >= 1");
  if (rbm_learning_rate < 0 || finetune_learning_rate < 0) throw ConfigError("learning rates must be >= 0");
  if (rbm_epochs < 0 || max_finetune_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (initial_momentum < 0 || initial_momentum >= 1 || final_momentum < 0 || final_momentum >= 1 ||
      finetune_momentum < 0 || finetune_momentum >= 1)
    throw ConfigError("momentum values must lie in [0, 1)");
  if (l2_coefficient < 0) throw ConfigError("l2_coefficient must be >= 0");
  if (!(validation_fraction > 0 && validation_fraction < 1)) throw ConfigError("validation_fraction must lie in (0, 1)");
  if (early_stopping_patience < 1) throw ConfigError("early_stopping_patience must be >= 1");
  if (rbm_init_std < 0 || head_init_std < 0) throw ConfigError("init std must be >= 0");
}

std::string to_string(InputKind kind) { return kind == InputKind::kRawPixels ? "RAW_PIXELS" : "FEATURES22"; }
std::string to_string(ModelKind kind) { return kind == ModelKind::kDbn ? "DBN" : "SDAE"; }

InputKind input_kind_from_string(const std::string& s) {
  if (s == "RAW_PIXELS") return InputKind::kRawPixels;
  if (s == "FEATURES22") return InputKind::kFeatures22;
  throw FormatError("unknown input kind '" + s + "'");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "DBN") return ModelKind::kDbn;
  if (s == "SDAE") return ModelKind::kSdae;
  throw FormatError("unknown model kind '" + s + "'");
}

std::vector<int> ClassifierModel::layer_widths() const {
  std::vector<int> w{static_cast<int>(network.inputs())};
  for (const auto& l : network.layers) w.push_back(static_cast<int>(l.outputs()));
  return w;
}

Rbm train_rbm(const Eigen::MatrixXd& data, Eigen::Index hidden, const TrainConfig& config, std::uint64_t layer_seed,
              std::vector<double>* errors) {
  Rng init_rng = make_rng(layer_seed, streams::kRbmInit);
  Rng sample_rng = make_rng(layer_seed, streams::kRbmSample);
  Rng batch_rng = make_rng(layer_seed, streams::kRbmBatch);

  Rbm rbm = random_rbm<double>(data.cols(), hidden, config.rbm_init_std, init_rng);
  RbmGradient<double> velocity(data.cols(), hidden);
  auto order = iota_indices(data.rows());
  for (int epoch = 0; epoch < config.rbm_epochs; ++epoch) {
    fisher_yates(order, batch_rng);
    CdStep<double> step{config.rbm_learning_rate, momentum_for(config, epoch), config.l2_coefficient, config.cd_steps};
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::MatrixXd batch = data(rows, Eigen::all);
      rbm = cd_update(batch, rbm, step, sample_rng, &velocity);
    }
    const double err = reconstruction_error(data, rbm);
    if (!std::isfinite(err)) throw NumericError("RBM training diverged (non-finite reconstruction error)");
    if (errors) errors->push_back(err);
  }
  return rbm;
}

PretrainResult pretrain(const Eigen::MatrixXd& data, const TrainConfig& config) {
  config.validate();
  PretrainResult result;
  Eigen::MatrixXd layer_input = data;
  for (std::size_t layer = 0; layer < config.layer_sizes.size(); ++layer) {
    std::vector<double> errors;
    result.stack.push_back(
        train_rbm(layer_input, config.layer_sizes[layer], config, derive_seed(config.seed, 1000 + layer), &errors));
    result.reconstruction_error.push_back(std::move(errors));
    if (layer + 1 < config.layer_sizes.size()) layer_input = hidden_probabilities(layer_input, result.stack.back());
  }
  return result;
}

ClassifierModel init_classifier(std::span<const Rbm> stack, Eigen::Index input_width, int class_count,
                                const TrainConfig& config) {
  if (class_count < 2) throw ClassCountError("a classifier needs at least 2 classes");
  ClassifierModel model;
  model.class_count = class_count;
  model.config = config;
  Eigen::Index width = input_width;
  for (const auto& rbm : stack) {
    if (rbm.visible() != width) throw ShapeError("RBM stack dimensions do not chain");
    model.network.layers.push_back({rbm.weights.transpose(), rbm.hidden_bias});
    width = rbm.hidden();
  }
  Rng rng = make_rng(config.seed, streams::kHeadInit);
  std::normal_distribution<double> gauss(0.0, config.head_init_std);
  DenseLayer<double> head{Eigen::MatrixXd(class_count, width), Eigen::VectorXd::Zero(class_count)};
  for (Eigen::Index c = 0; c < head.weights.cols(); ++c)
    for (Eigen::Index r = 0; r < head.weights.rows(); ++r) head.weights(r, c) = config.head_init_std > 0 ? gauss(rng) : 0.0;
  model.network.layers.push_back(std::move(head));
  return model;
}

Eigen::MatrixXd one_hot(std::span<const int> labels, int class_count) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return t;
}

std::pair<ClassifierModel, TrainReport> finetune(const ClassifierModel& model, const Eigen::MatrixXd& features,
                                                 std::span<const int> labels, const TrainConfig& config) {
  config.validate();
  if (features.rows() == 0) throw SizeError("fine-tuning needs labeled data");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) throw ShapeError("feature rows differ from labels");
  if (features.cols() != model.input_width()) throw ShapeError("feature width does not match model input");
  check_labels(labels, model.class_count);
  if (std::set<int>(labels.begin(), labels.end()).size() < 2)
    throw DegenerateLabelError("training labels contain a single class");
  if (features.rows() < 2) throw SizeError("fine-tuning needs at least 2 samples for a validation split");

  const Eigen::Index n = features.rows();
  auto order = iota_indices(n);
  Rng split_rng = make_rng(config.seed, streams::kValidation);
  fisher_yates(order, split_rng);
  auto val_count = static_cast<Eigen::Index>(std::floor(config.validation_fraction * static_cast<double>(n)));
  val_count = std::clamp<Eigen::Index>(val_count, 1, n - 1);
  const std::vector<Eigen::Index> val_idx(order.begin(), order.begin() + val_count);
  std::vector<Eigen::Index> train_idx(order.begin() + val_count, order.end());

  const Eigen::MatrixXd targets = one_hot(labels, model.class_count);
  const Eigen::MatrixXd val_x = features(val_idx, Eigen::all);
  const Eigen::MatrixXd val_t = targets(val_idx, Eigen::all);

  ClassifierModel current = model;
  current.config = config;
  ClassifierModel best = current;
  TrainReport report;
  double best_error = 2.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  Rng epoch_rng = make_rng(config.seed, streams::kFinetune);
  NetworkGradient<double> grad = zeros_like(current.network);
  NetworkGradient<double> velocity = zeros_like(current.network);
  std::vector<Eigen::MatrixXd> acts;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_finetune_epochs; ++epoch) {
    fisher_yates(train_idx, epoch_rng);
    double loss_sum = 0;
    int wrong = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += batch) {
      const std::size_t end = std::min(train_idx.size(), start + batch);
      const std::vector<Eigen::Index> rows(train_idx.begin() + static_cast<std::ptrdiff_t>(start),
                                           train_idx.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::MatrixXd x = features(rows, Eigen::all);
      const Eigen::MatrixXd t = targets(rows, Eigen::all);
      const double loss = sse_loss(current.network, x, t, config.l2_coefficient, &grad, &acts);
      if (!std::isfinite(loss)) throw NumericError("fine-tuning loss became non-finite at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(rows.size());
      wrong += misclassified(acts.back(), t);
      for (std::size_t l = 0; l < current.network.layers.size(); ++l) {
        auto& v = velocity.layers[l];
        v.weights = config.finetune_momentum * v.weights - config.finetune_learning_rate * grad.layers[l].weights;
        v.bias = config.finetune_momentum * v.bias - config.finetune_learning_rate * grad.layers[l].bias;
        current.network.layers[l].weights += v.weights;
        current.network.layers[l].bias += v.bias;
      }
    }

    const Eigen::MatrixXd val_y = forward(current.network, val_x);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
    rec.train_error = static_cast<double>(wrong) / static_cast<double>(train_idx.size());
    rec.validation_loss = 0.5 * (val_y - val_t).squaredNorm() / static_cast<double>(val_x.rows());
    rec.validation_error = static_cast<double>(misclassified(val_y, val_t)) / static_cast<double>(val_x.rows());
    report.epochs.push_back(rec);

    if (rec.validation_error < best_error || (rec.validation_error == best_error && rec.validation_loss < best_loss)) {
      best_error = rec.validation_error;
      best_loss = rec.validation_loss;
      best = current;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stopping_patience) {
      report.stopped_early = true;
      break;
    }
  }
  return {std::move(best), std::move(report)};
}

std::pair<ClassifierModel, TrainReport> train_dbn(const Eigen::MatrixXd& features, std::span<const int> labels,
                                                  int class_count, InputKind input_kind, const TrainConfig& config) {
  config.validate();
  auto pre = pretrain(features, config);
  ClassifierModel model = init_classifier(pre.stack, features.cols(), class_count, config);
  model.kind = ModelKind::kDbn;
  model.input_kind = input_kind;
  auto [trained, report] = finetune(model, features, labels, config);
  report.pretrain_reconstruction_error = std::move(pre.reconstruction_error);
  return {std::move(trained), std::move(report)};
}

int argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

Eigen::MatrixXd predict_proba_batch(const ClassifierModel& model, const Eigen::MatrixXd& features) {
  Eigen::MatrixXd y = forward(model.network, features).cwiseMax(1e-9).cwiseMin(1.0);
  const Eigen::VectorXd sums = y.rowwise().sum();
  for (Eigen::Index r = 0; r < y.rows(); ++r) y.row(r) /= sums(r);
  return y;
}

Eigen::VectorXd predict_proba(const ClassifierModel& model, const Eigen::VectorXd& features) {
  return predict_proba_batch(model, features.transpose()).row(0).transpose();
}

int classify(const ClassifierModel& model, const Eigen::VectorXd& features) {
  return argmax(predict_proba(model, features));
}

std::vector<int> classify_batch(const ClassifierModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd p = predict_proba_batch(model, features);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index r = 0; r < p.rows(); ++r) out[static_cast<std::size_t>(r)] = argmax(p.row(r).transpose());
  return out;
}

Evaluation evaluate(const ClassifierModel& model, const Eigen::MatrixXd& features, std::span<const int> labels) {
  if (features.rows() == 0) throw SizeError("evaluation needs a non-empty test set");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) throw ShapeError("feature rows differ from labels");
  check_labels(labels, model.class_count);
  const auto predicted = classify_batch(model, features);
  Evaluation e;
  e.confusion = Eigen::MatrixXi::Zero(model.class_count, model.class_count);
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++e.confusion(labels[i], predicted[i]);
    if (labels[i] == predicted[i]) ++correct;
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return e;
}

void write_train_report_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "epoch,train_error,validation_error\n";
  for (const auto& r : report.epochs) out << r.epoch << ',' << r.train_error << ',' << r.validation_error << '\n';
}

}  // namespace satpipe
