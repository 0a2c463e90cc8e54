#pragma once

#include <vector>

#include <Eigen/Dense>

#include "satpipe/rbm.hpp"

namespace satpipe {

/// Fully connected sigmoid layer; `weights` is out x in.
template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weights;
  VectorX<Scalar> bias;

  Eigen::Index inputs() const { return weights.cols(); }
  Eigen::Index outputs() const { return weights.rows(); }

  bool operator==(const DenseLayer& o) const { return weights == o.weights && bias == o.bias; }
};

/// Stack of sigmoid layers; the last one is the classifier head.
template <typename Scalar>
struct FeedForward {
  std::vector<DenseLayer<Scalar>> layers;

  Eigen::Index inputs() const { return layers.front().inputs(); }
  Eigen::Index outputs() const { return layers.back().outputs(); }

  bool operator==(const FeedForward&) const = default;
};

/// Activations per layer for a batch (rows = samples). Element 0 is the
/// input itself; element l + 1 is the output of layer l.
template <typename Scalar>
std::vector<MatrixX<Scalar>> forward_all(const FeedForward<Scalar>& net, const MatrixX<Scalar>& input) {
  if (net.layers.empty()) throw ShapeError("network has no layers");
  if (input.cols() != net.inputs())
    throw ShapeError("input width " + std::to_string(input.cols()) + " does not match network input " +
                     std::to_string(net.inputs()));
  std::vector<MatrixX<Scalar>> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(input);
  for (const auto& layer : net.layers) {
    MatrixX<Scalar> z = acts.back() * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    acts.push_back(sigmoid(z));
  }
  return acts;
}

template <typename Scalar>
MatrixX<Scalar> forward(const FeedForward<Scalar>& net, const MatrixX<Scalar>& input) {
  return std::move(forward_all(net, input).back());
}

/// Gradient buffers shaped like the network.
template <typename Scalar>
using NetworkGradient = FeedForward<Scalar>;

template <typename Scalar>
NetworkGradient<Scalar> zeros_like(const FeedForward<Scalar>& net) {
  NetworkGradient<Scalar> g;
  for (const auto& l : net.layers)
    g.layers.push_back({MatrixX<Scalar>::Zero(l.weights.rows(), l.weights.cols()), VectorX<Scalar>::Zero(l.bias.size())});
  return g;
}

template <typename Scalar>
Scalar weight_sq_norm(const FeedForward<Scalar>& net) {
  Scalar total = 0;
  for (const auto& l : net.layers) total += l.weights.squaredNorm();
  return total;
}

/// Sum-squared error averaged over the batch plus the L2 weight penalty:
///
///   L = 1/(2B) sum_n ||y_n - t_n||^2 + l2/2 sum_l ||W_l||^2
///
/// Biases are not penalized. If `grad` is non-null it receives dL/dparams.
/// `acts_out` optionally receives the forward activations.
template <typename Scalar>
Scalar sse_loss(const FeedForward<Scalar>& net, const MatrixX<Scalar>& input, const MatrixX<Scalar>& targets,
                Scalar l2, NetworkGradient<Scalar>* grad = nullptr, std::vector<MatrixX<Scalar>>* acts_out = nullptr) {
  auto acts = forward_all(net, input);
  const MatrixX<Scalar>& y = acts.back();
  if (targets.rows() != y.rows() || targets.cols() != y.cols()) throw ShapeError("target shape mismatch");
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(input.rows());
  const Scalar loss = Scalar(0.5) * inv_b * (y - targets).squaredNorm() + Scalar(0.5) * l2 * weight_sq_norm(net);

  if (grad) {
    if (grad->layers.size() != net.layers.size()) *grad = zeros_like(net);
    // delta = dL/dz for the current layer, rows = samples.
    MatrixX<Scalar> delta = ((y - targets).array() * y.array() * (Scalar(1) - y.array())).matrix() * inv_b;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
      const MatrixX<Scalar>& a_in = acts[l];
      grad->layers[l].weights = delta.transpose() * a_in + l2 * net.layers[l].weights;
      grad->layers[l].bias = delta.colwise().sum().transpose();
      if (l > 0) {
        MatrixX<Scalar> back = delta * net.layers[l].weights;
        delta = (back.array() * a_in.array() * (Scalar(1) - a_in.array())).matrix();
      }
    }
  }
  if (acts_out) *acts_out = std::move(acts);
  return loss;
}

}  // namespace satpipe
