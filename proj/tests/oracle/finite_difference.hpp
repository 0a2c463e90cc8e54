#pragma once

// Central finite differences over every parameter of a network or
// autoencoder, compared against an analytic gradient.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "satpipe/network.hpp"
#include "satpipe/sdae.hpp"

namespace oracle {

struct GradCheck {
  double max_relative_error = 0;
  std::size_t parameters = 0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

// Perturbs each entry of `param` in place, evaluating `loss` at +/- h.
inline void check_block(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& analytic,
                        const std::function<double()>& loss, double h, GradCheck& out) {
  for (Eigen::Index k = 0; k < param.size(); ++k) {
    double& x = param.data()[k];
    const double saved = x;
    x = saved + h;
    const double up = loss();
    x = saved - h;
    const double down = loss();
    x = saved;
    out.max_relative_error = std::max(out.max_relative_error, relative_error(analytic.data()[k], (up - down) / (2 * h)));
    ++out.parameters;
  }
}

inline GradCheck check_network(satpipe::FeedForward<double> net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t,
                               double l2, double h = 1e-6) {
  satpipe::NetworkGradient<double> g;
  satpipe::sse_loss(net, x, t, l2, &g);
  auto loss = [&] { return satpipe::sse_loss(net, x, t, l2); };
  GradCheck out;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    check_block(net.layers[l].weights, g.layers[l].weights, loss, h, out);
    check_block(net.layers[l].bias, g.layers[l].bias, loss, h, out);
  }
  return out;
}

inline GradCheck check_autoencoder(satpipe::Autoencoder p, const Eigen::MatrixXd& noisy, const Eigen::MatrixXd& clean,
                                   double h = 1e-6) {
  satpipe::Autoencoder g = p;
  satpipe::reconstruction_loss(p, noisy, clean, &g);
  auto loss = [&] { return satpipe::reconstruction_loss(p, noisy, clean); };
  GradCheck out;
  check_block(p.encode_weights, g.encode_weights, loss, h, out);
  check_block(p.encode_bias, g.encode_bias, loss, h, out);
  check_block(p.decode_weights, g.decode_weights, loss, h, out);
  check_block(p.decode_bias, g.decode_bias, loss, h, out);
  return out;
}

inline satpipe::FeedForward<double> random_network(const std::vector<int>& widths, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 0.8);
  satpipe::FeedForward<double> net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    satpipe::DenseLayer<double> layer{Eigen::MatrixXd(widths[l + 1], widths[l]), Eigen::VectorXd(widths[l + 1])};
    for (Eigen::Index k = 0; k < layer.weights.size(); ++k) layer.weights.data()[k] = g(rng);
    for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = g(rng);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline satpipe::Autoencoder random_autoencoder(int inputs, int hidden, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 0.8);
  auto fill = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
    return m;
  };
  return {fill(hidden, inputs), fill(hidden, 1).col(0), fill(inputs, hidden), fill(inputs, 1).col(0)};
}

}  // namespace oracle
