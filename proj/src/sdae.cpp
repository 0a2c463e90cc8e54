#include "satpipe/sdae.hpp"

#include <cmath>
#include <numeric>

#include "satpipe/errors.hpp"
#include "satpipe/random.hpp"

namespace satpipe {

void SdaeConfig::validate() const {
  for (int w : layer_sizes)
    if (w < 1) throw ConfigError("layer sizes must be positive");
  if (!(corruption_fraction >= 0 && corruption_fraction < 1)) throw ConfigError("corruption_fraction must lie in [0, 1)");
  if (learning_rate < 0) throw ConfigError("learning_rate must be >= 0");
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  finetune.validate();
}

Eigen::MatrixXd mask_corrupt(const Eigen::MatrixXd& data, double fraction, Rng& rng) {
  if (fraction <= 0) return data;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::MatrixXd out = data;
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      if (uniform(rng) < fraction) out(r, c) = 0.0;
  return out;
}

double reconstruction_mse(const Autoencoder& p, const Eigen::MatrixXd& input, const Eigen::MatrixXd& target) {
  if (input.rows() != target.rows() || input.cols() != target.cols())
    throw ShapeError("input and target differ in shape");
  return (decode_batch(encode_batch(input, p), p) - target).squaredNorm() / static_cast<double>(target.size());
}

double reconstruction_mse(const Autoencoder& p, const Eigen::MatrixXd& data) { return reconstruction_mse(p, data, data); }

PretrainedAutoencoder pretrain_layer(const Eigen::MatrixXd& data, Eigen::Index width, const SdaeConfig& config,
                                     std::uint64_t layer_seed) {
  config.validate();
  if (width < 1) throw ConfigError("autoencoder width must be positive");
  const Eigen::Index m = data.cols();
  Rng init_rng = make_rng(layer_seed, streams::kAutoencoder);
  Rng noise_rng = make_rng(layer_seed, streams::kRbmSample);
  Rng batch_rng = make_rng(layer_seed, streams::kRbmBatch);
  Rng probe_rng = make_rng(layer_seed, streams::kAutoencoderProbe);
  const Eigen::MatrixXd probe = mask_corrupt(data, config.corruption_fraction, probe_rng);

  const double limit = std::sqrt(6.0 / static_cast<double>(m + width));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd w(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) w(i, j) = uniform(init_rng);
    return w;
  };
  PretrainedAutoencoder out;
  Autoencoder& p = out.params;
  p.encode_weights = draw(width, m);
  p.encode_bias = Eigen::VectorXd::Zero(width);
  p.decode_weights = draw(m, width);
  p.decode_bias = Eigen::VectorXd::Zero(m);

  Autoencoder grad = p;
  Autoencoder velocity{Eigen::MatrixXd::Zero(width, m), Eigen::VectorXd::Zero(width), Eigen::MatrixXd::Zero(m, width),
                       Eigen::VectorXd::Zero(m)};
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<std::size_t>(config.finetune.batch_size);
  const double lr = config.learning_rate;
  const double mu = config.momentum;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(batch_rng)]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::MatrixXd clean = data(rows, Eigen::all);
      const Eigen::MatrixXd noisy = mask_corrupt(clean, config.corruption_fraction, noise_rng);
      reconstruction_loss(p, noisy, clean, &grad);
      velocity.encode_weights = mu * velocity.encode_weights - lr * grad.encode_weights;
      velocity.encode_bias = mu * velocity.encode_bias - lr * grad.encode_bias;
      velocity.decode_weights = mu * velocity.decode_weights - lr * grad.decode_weights;
      velocity.decode_bias = mu * velocity.decode_bias - lr * grad.decode_bias;
      p.encode_weights += velocity.encode_weights;
      p.encode_bias += velocity.encode_bias;
      p.decode_weights += velocity.decode_weights;
      p.decode_bias += velocity.decode_bias;
    }
    const double err = reconstruction_mse(p, probe, data);
    if (!std::isfinite(err)) throw NumericError("autoencoder training diverged");
    out.reconstruction_error.push_back(err);
  }
  return out;
}

std::pair<ClassifierModel, TrainReport> train_sdae(const Eigen::MatrixXd& features, std::span<const int> labels,
                                                   int class_count, InputKind input_kind, const SdaeConfig& config) {
  config.validate();
  if (class_count < 2) throw ClassCountError("a classifier needs at least 2 classes");
  TrainConfig tc = config.finetune;
  tc.layer_sizes = config.layer_sizes;
  tc.seed = config.seed;

  ClassifierModel model;
  model.kind = ModelKind::kSdae;
  model.input_kind = input_kind;
  model.class_count = class_count;
  model.config = tc;

  std::vector<std::vector<double>> pretrain_errors;
  Eigen::MatrixXd layer_input = features;
  for (std::size_t l = 0; l < config.layer_sizes.size(); ++l) {
    auto ae = pretrain_layer(layer_input, config.layer_sizes[l], config, derive_seed(config.seed, 2000 + l));
    layer_input = encode_batch(layer_input, ae.params);
    model.network.layers.push_back({ae.params.encode_weights, ae.params.encode_bias});
    pretrain_errors.push_back(std::move(ae.reconstruction_error));
  }

  // The head follows the DBN initialization.
  const Eigen::Index top = layer_input.cols();
  ClassifierModel head_only = init_classifier({}, top, class_count, tc);
  model.network.layers.push_back(head_only.network.layers.back());

  auto [trained, report] = finetune(model, features, labels, tc);
  report.pretrain_reconstruction_error = std::move(pretrain_errors);
  return {std::move(trained), std::move(report)};
}

}  // namespace satpipe
