#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "satpipe/network.hpp"
#include "satpipe/normalize.hpp"
#include "satpipe/rbm.hpp"

namespace satpipe {

using Rbm = RbmParams<double>;
using Network = FeedForward<double>;

struct TrainConfig {
  std::vector<int> layer_sizes;
  int cd_steps = 1;
  double rbm_learning_rate = 0.05;
  int rbm_epochs = 30;
  double initial_momentum = 0.5;
  double final_momentum = 0.9;
  int momentum_switch_epoch = 5;  ///< epochs run at the initial momentum
  int batch_size = 100;
  double finetune_learning_rate = 0.01;
  double finetune_momentum = 0.9;
  int max_finetune_epochs = 500;
  double l2_coefficient = 1e-4;
  double validation_fraction = 0.1;
  int early_stopping_patience = 20;
  double rbm_init_std = 0.01;
  double head_init_std = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

enum class InputKind { kRawPixels, kFeatures22 };
enum class ModelKind { kDbn, kSdae };

std::string to_string(InputKind kind);
std::string to_string(ModelKind kind);
InputKind input_kind_from_string(const std::string& s);
ModelKind model_kind_from_string(const std::string& s);

/// Feedforward classifier: hidden layers initialized from a pretrained
/// stack (RBMs or autoencoder encoders) plus a sigmoid output head with one
/// unit per class.
///
/// Outputs are trained against 1-of-K targets under sum-squared error, so
/// each output approximates the class posterior P(C_k | x). For two classes
/// the targets reduce to t in {0, 1} and the expectation of t given x equals
/// P(C_1 | x), with P(C_2 | x) its complement. `predict_proba` clamps the
/// raw outputs to [1e-9, 1] and renormalizes them to a distribution.
struct ClassifierModel {
  ModelKind kind = ModelKind::kDbn;
  InputKind input_kind = InputKind::kFeatures22;
  int class_count = 2;
  Network network;
  TrainConfig config;
  /// Feature-input models keep their training extrema for train-stats mode.
  std::optional<NormalizationStats> normalization;

  std::size_t hidden_layer_count() const { return network.layers.size() - 1; }
  const DenseLayer<double>& head() const { return network.layers.back(); }
  Eigen::Index input_width() const { return network.inputs(); }
  std::vector<int> layer_widths() const;

  bool operator==(const ClassifierModel&) const = default;
};

struct PretrainResult {
  std::vector<Rbm> stack;
  /// reconstruction_error[layer][epoch]
  std::vector<std::vector<double>> reconstruction_error;
};

/// Greedy layer-wise CD training; layer t sees the hidden probabilities of
/// layer t - 1.
PretrainResult pretrain(const Eigen::MatrixXd& data, const TrainConfig& config);

/// Trains one RBM of `hidden` units on `data`; returns the per-epoch
/// reconstruction errors through `errors`.
Rbm train_rbm(const Eigen::MatrixXd& data, Eigen::Index hidden, const TrainConfig& config, std::uint64_t layer_seed,
              std::vector<double>* errors = nullptr);

/// Hidden layers take W^T and the hidden biases of each RBM; the head is
/// drawn from N(0, head_init_std) with zero bias.
ClassifierModel init_classifier(std::span<const Rbm> stack, Eigen::Index input_width, int class_count,
                                const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_error = 0;  ///< misclassification rate
  double validation_error = 0;
  double train_loss = 0;
  double validation_loss = 0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
  std::vector<std::vector<double>> pretrain_reconstruction_error;

  bool operator==(const TrainReport&) const = default;
};

/// Backpropagation on sum-squared error with L2, momentum SGD, and early
/// stopping on a held-out validation slice; returns the snapshot with the
/// lowest validation error (ties broken by validation loss).
std::pair<ClassifierModel, TrainReport> finetune(const ClassifierModel& model, const Eigen::MatrixXd& features,
                                                 std::span<const int> labels, const TrainConfig& config);

/// pretrain + init_classifier + finetune.
std::pair<ClassifierModel, TrainReport> train_dbn(const Eigen::MatrixXd& features, std::span<const int> labels,
                                                  int class_count, InputKind input_kind, const TrainConfig& config);

Eigen::VectorXd predict_proba(const ClassifierModel& model, const Eigen::VectorXd& features);
Eigen::MatrixXd predict_proba_batch(const ClassifierModel& model, const Eigen::MatrixXd& features);
int classify(const ClassifierModel& model, const Eigen::VectorXd& features);
std::vector<int> classify_batch(const ClassifierModel& model, const Eigen::MatrixXd& features);
/// Index of the largest entry; lowest index on ties.
int argmax(const Eigen::VectorXd& v);

struct Evaluation {
  double accuracy = 0;
  Eigen::MatrixXi confusion;  ///< rows: true class, cols: predicted class
};

Evaluation evaluate(const ClassifierModel& model, const Eigen::MatrixXd& features, std::span<const int> labels);

/// 1-of-K target matrix.
Eigen::MatrixXd one_hot(std::span<const int> labels, int class_count);

void write_train_report_csv(const std::filesystem::path& path, const TrainReport& report);

}  // namespace satpipe
