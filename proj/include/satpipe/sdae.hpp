#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "satpipe/dbn.hpp"

namespace satpipe {

/// One denoising autoencoder layer with untied weights.
template <typename Scalar>
struct AutoencoderParams {
  MatrixX<Scalar> encode_weights;  ///< hidden x input
  VectorX<Scalar> encode_bias;
  MatrixX<Scalar> decode_weights;  ///< input x hidden
  VectorX<Scalar> decode_bias;

  Eigen::Index inputs() const { return encode_weights.cols(); }
  Eigen::Index hidden() const { return encode_weights.rows(); }

  bool operator==(const AutoencoderParams& o) const {
    return encode_weights == o.encode_weights && encode_bias == o.encode_bias && decode_weights == o.decode_weights &&
           decode_bias == o.decode_bias;
  }
};

using Autoencoder = AutoencoderParams<double>;

template <typename Scalar>
VectorX<Scalar> encode(const VectorX<Scalar>& input, const AutoencoderParams<Scalar>& p) {
  if (input.size() != p.inputs()) throw ShapeError("encode: input size mismatch");
  return sigmoid((p.encode_weights * input + p.encode_bias).eval());
}

template <typename Scalar>
VectorX<Scalar> decode(const VectorX<Scalar>& hidden, const AutoencoderParams<Scalar>& p) {
  if (hidden.size() != p.hidden()) throw ShapeError("decode: hidden size mismatch");
  return sigmoid((p.decode_weights * hidden + p.decode_bias).eval());
}

template <typename Scalar>
MatrixX<Scalar> encode_batch(const MatrixX<Scalar>& input, const AutoencoderParams<Scalar>& p) {
  if (input.cols() != p.inputs()) throw ShapeError("encode: input width mismatch");
  MatrixX<Scalar> z = input * p.encode_weights.transpose();
  z.rowwise() += p.encode_bias.transpose();
  return sigmoid(z);
}

template <typename Scalar>
MatrixX<Scalar> decode_batch(const MatrixX<Scalar>& hidden, const AutoencoderParams<Scalar>& p) {
  if (hidden.cols() != p.hidden()) throw ShapeError("decode: hidden width mismatch");
  MatrixX<Scalar> z = hidden * p.decode_weights.transpose();
  z.rowwise() += p.decode_bias.transpose();
  return sigmoid(z);
}

/// L = 1/(2B) sum_n ||decode(encode(corrupted_n)) - clean_n||^2, with the
/// gradient written to `grad` when non-null.
template <typename Scalar>
Scalar reconstruction_loss(const AutoencoderParams<Scalar>& p, const MatrixX<Scalar>& corrupted,
                           const MatrixX<Scalar>& clean, AutoencoderParams<Scalar>* grad = nullptr) {
  if (corrupted.rows() != clean.rows() || corrupted.cols() != clean.cols())
    throw ShapeError("corrupted and clean batches differ in shape");
  const MatrixX<Scalar> h = encode_batch(corrupted, p);
  const MatrixX<Scalar> y = decode_batch(h, p);
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(clean.rows());
  const Scalar loss = Scalar(0.5) * inv_b * (y - clean).squaredNorm();
  if (grad) {
    const MatrixX<Scalar> d_out = ((y - clean).array() * y.array() * (Scalar(1) - y.array())).matrix() * inv_b;
    grad->decode_weights = d_out.transpose() * h;
    grad->decode_bias = d_out.colwise().sum().transpose();
    const MatrixX<Scalar> d_hidden = ((d_out * p.decode_weights).array() * h.array() * (Scalar(1) - h.array())).matrix();
    grad->encode_weights = d_hidden.transpose() * corrupted;
    grad->encode_bias = d_hidden.colwise().sum().transpose();
  }
  return loss;
}

struct SdaeConfig {
  std::vector<int> layer_sizes;
  double corruption_fraction = 0.25;
  double learning_rate = 0.01;
  double momentum = 0.5;
  int epochs = 30;
  /// Fine-tuning fields (batch size, learning rate, L2, early stopping,
  /// seed); its layer_sizes is ignored.
  TrainConfig finetune;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SdaeConfig&) const = default;
};

struct PretrainedAutoencoder {
  Autoencoder params;
  /// Per-element MSE after each epoch of reconstructing the clean data from
  /// one fixed corruption draw (the quantity SGD is pushing down).
  std::vector<double> reconstruction_error;
};

/// Masking-noise denoising autoencoder trained by momentum SGD on the
/// reconstruction loss. Weights start from a Glorot-uniform draw.
PretrainedAutoencoder pretrain_layer(const Eigen::MatrixXd& data, Eigen::Index width, const SdaeConfig& config,
                                     std::uint64_t layer_seed);

/// Per-element MSE of decode(encode(data)) against data.
double reconstruction_mse(const Autoencoder& p, const Eigen::MatrixXd& data);
double reconstruction_mse(const Autoencoder& p, const Eigen::MatrixXd& input, const Eigen::MatrixXd& target);

/// Zeroes each entry independently with probability `fraction`.
Eigen::MatrixXd mask_corrupt(const Eigen::MatrixXd& data, double fraction, Rng& rng);

/// Greedy autoencoder pretraining, then a classifier head on the deepest
/// activations, fine-tuned with the same backpropagation as the DBN.
std::pair<ClassifierModel, TrainReport> train_sdae(const Eigen::MatrixXd& features, std::span<const int> labels,
                                                   int class_count, InputKind input_kind, const SdaeConfig& config);

}  // namespace satpipe
