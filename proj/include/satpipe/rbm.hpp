#pragma once

#include <cmath>
#include <random>
#include <type_traits>

#include <Eigen/Dense>

#include "satpipe/errors.hpp"
#include "satpipe/random.hpp"

namespace satpipe {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Logistic function; branches on the sign so exp never overflows.
template <typename Scalar>
  requires std::is_floating_point_v<Scalar>
inline Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Derived>
inline typename Derived::PlainObject sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return sigmoid(v); });
}

/// Binary RBM. `weights` is visible x hidden: w(i, j) couples v_i and h_j.
template <typename Scalar>
struct RbmParams {
  MatrixX<Scalar> weights;
  VectorX<Scalar> visible_bias;
  VectorX<Scalar> hidden_bias;

  RbmParams() = default;
  RbmParams(Eigen::Index visible, Eigen::Index hidden)
      : weights(MatrixX<Scalar>::Zero(visible, hidden)),
        visible_bias(VectorX<Scalar>::Zero(visible)),
        hidden_bias(VectorX<Scalar>::Zero(hidden)) {}

  Eigen::Index visible() const { return weights.rows(); }
  Eigen::Index hidden() const { return weights.cols(); }

  bool operator==(const RbmParams& o) const {
    return weights == o.weights && visible_bias == o.visible_bias && hidden_bias == o.hidden_bias;
  }
};

/// Zero-mean Gaussian weights, zero biases.
template <typename Scalar>
RbmParams<Scalar> random_rbm(Eigen::Index visible, Eigen::Index hidden, Scalar stddev, Rng& rng) {
  RbmParams<Scalar> p(visible, hidden);
  std::normal_distribution<Scalar> gauss(Scalar(0), stddev);
  for (Eigen::Index j = 0; j < hidden; ++j)
    for (Eigen::Index i = 0; i < visible; ++i) p.weights(i, j) = gauss(rng);
  return p;
}

/// E(v, h) = -a.v - b.h - v' W h
template <typename Scalar>
Scalar energy(const VectorX<Scalar>& v, const VectorX<Scalar>& h, const RbmParams<Scalar>& p) {
  if (v.size() != p.visible() || h.size() != p.hidden()) throw ShapeError("energy: state sizes do not match RBM");
  return -p.visible_bias.dot(v) - p.hidden_bias.dot(h) - v.dot(p.weights * h);
}

/// P(h_j = 1 | v) for every hidden unit.
template <typename Scalar>
VectorX<Scalar> prob_h_given_v(const VectorX<Scalar>& v, const RbmParams<Scalar>& p) {
  if (v.size() != p.visible()) throw ShapeError("prob_h_given_v: visible size mismatch");
  return sigmoid((p.hidden_bias + p.weights.transpose() * v).eval());
}

/// P(v_i = 1 | h) for every visible unit.
template <typename Scalar>
VectorX<Scalar> prob_v_given_h(const VectorX<Scalar>& h, const RbmParams<Scalar>& p) {
  if (h.size() != p.hidden()) throw ShapeError("prob_v_given_h: hidden size mismatch");
  return sigmoid((p.visible_bias + p.weights * h).eval());
}

// Batched forms: one sample per row.
template <typename Scalar>
MatrixX<Scalar> hidden_probabilities(const MatrixX<Scalar>& visible, const RbmParams<Scalar>& p) {
  if (visible.cols() != p.visible()) throw ShapeError("hidden_probabilities: visible width mismatch");
  MatrixX<Scalar> z = visible * p.weights;
  z.rowwise() += p.hidden_bias.transpose();
  return sigmoid(z);
}

template <typename Scalar>
MatrixX<Scalar> visible_probabilities(const MatrixX<Scalar>& hidden, const RbmParams<Scalar>& p) {
  if (hidden.cols() != p.hidden()) throw ShapeError("visible_probabilities: hidden width mismatch");
  MatrixX<Scalar> z = hidden * p.weights.transpose();
  z.rowwise() += p.visible_bias.transpose();
  return sigmoid(z);
}

template <typename Scalar>
MatrixX<Scalar> sample_bernoulli(const MatrixX<Scalar>& probabilities, Rng& rng) {
  std::uniform_real_distribution<Scalar> uniform(Scalar(0), Scalar(1));
  MatrixX<Scalar> s(probabilities.rows(), probabilities.cols());
  for (Eigen::Index c = 0; c < s.cols(); ++c)
    for (Eigen::Index r = 0; r < s.rows(); ++r) s(r, c) = uniform(rng) < probabilities(r, c) ? Scalar(1) : Scalar(0);
  return s;
}

/// Same shapes as the parameters; used for gradients and momentum buffers.
template <typename Scalar>
using RbmGradient = RbmParams<Scalar>;

/// Batch-averaged CD-k estimate of the log-likelihood gradient.
///
/// Positive phase: data visibles and hidden probabilities. Negative phase:
/// k alternations of Bernoulli-sampled hiddens and real-valued visible
/// probabilities; the final hidden statistics are probabilities.
template <typename Scalar>
RbmGradient<Scalar> cd_gradient(const MatrixX<Scalar>& batch, const RbmParams<Scalar>& p, int cd_steps, Rng& rng) {
  if (batch.cols() != p.visible()) throw ShapeError("cd_gradient: batch width does not match RBM visible size");
  if (cd_steps < 1) throw ConfigError("cd_steps must be >= 1");
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.rows());

  const MatrixX<Scalar> h_data = hidden_probabilities(batch, p);
  MatrixX<Scalar> h_state = sample_bernoulli(h_data, rng);
  MatrixX<Scalar> v_model;
  MatrixX<Scalar> h_model;
  for (int step = 0; step < cd_steps; ++step) {
    v_model = visible_probabilities(h_state, p);
    h_model = hidden_probabilities(v_model, p);
    if (step + 1 < cd_steps) h_state = sample_bernoulli(h_model, rng);
  }

  RbmGradient<Scalar> g;
  g.weights = (batch.transpose() * h_data - v_model.transpose() * h_model) * inv_n;
  g.visible_bias = (batch - v_model).colwise().sum().transpose() * inv_n;
  g.hidden_bias = (h_data - h_model).colwise().sum().transpose() * inv_n;
  return g;
}

template <typename Scalar>
struct CdStep {
  Scalar learning_rate = Scalar(0.05);
  Scalar momentum = Scalar(0.5);
  Scalar l2 = Scalar(1e-4);
  int cd_steps = 1;
};

/// One CD-k step with momentum and L2 weight decay (weights only).
/// `velocity` carries momentum between calls; pass nullptr for a plain step.
template <typename Scalar>
RbmParams<Scalar> cd_update(const MatrixX<Scalar>& batch, const RbmParams<Scalar>& p, const CdStep<Scalar>& step,
                            Rng& rng, RbmGradient<Scalar>* velocity = nullptr) {
  const RbmGradient<Scalar> g = cd_gradient(batch, p, step.cd_steps, rng);
  RbmGradient<Scalar> local(p.visible(), p.hidden());
  RbmGradient<Scalar>& v = velocity ? *velocity : local;
  if (v.visible() != p.visible() || v.hidden() != p.hidden()) v = RbmGradient<Scalar>(p.visible(), p.hidden());

  v.weights = step.momentum * v.weights + step.learning_rate * (g.weights - step.l2 * p.weights);
  v.visible_bias = step.momentum * v.visible_bias + step.learning_rate * g.visible_bias;
  v.hidden_bias = step.momentum * v.hidden_bias + step.learning_rate * g.hidden_bias;

  RbmParams<Scalar> out = p;
  out.weights += v.weights;
  out.visible_bias += v.visible_bias;
  out.hidden_bias += v.hidden_bias;
  return out;
}

/// Mean per-element squared error of the mean-field reconstruction
/// P(v | P(h | v)).
template <typename Scalar>
Scalar reconstruction_error(const MatrixX<Scalar>& data, const RbmParams<Scalar>& p) {
  const MatrixX<Scalar> recon = visible_probabilities(hidden_probabilities(data, p), p);
  return (recon - data).squaredNorm() / static_cast<Scalar>(data.size());
}

}  // namespace satpipe
