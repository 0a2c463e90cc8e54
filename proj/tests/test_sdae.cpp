#include <random>

#include "doctest.h"
#include "oracle/finite_difference.hpp"
#include "satpipe/errors.hpp"
#include "satpipe/sdae.hpp"

using namespace satpipe;

namespace {

Autoencoder one_by_one(double w, double b) {
  return {Eigen::MatrixXd::Constant(1, 1, w), Eigen::VectorXd::Constant(1, b), Eigen::MatrixXd::Constant(1, 1, w),
          Eigen::VectorXd::Constant(1, b)};
}

Eigen::MatrixXd unit_random(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

}  // namespace

TEST_CASE("encode and decode") {
  Autoencoder zero{Eigen::MatrixXd::Zero(3, 5), Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(5, 3),
                   Eigen::VectorXd::Zero(5)};
  CHECK(encode(Eigen::VectorXd::Ones(5).eval(), zero).isConstant(0.5));
  CHECK(decode(Eigen::VectorXd::Ones(3).eval(), zero).isConstant(0.5));

  const auto p = one_by_one(0.0, 2.0);
  CHECK(encode(Eigen::VectorXd::Constant(1, 0.3).eval(), p)(0) == doctest::Approx(0.8807970779778823).epsilon(1e-14));
  CHECK(decode(Eigen::VectorXd::Constant(1, 0.3).eval(), p)(0) == doctest::Approx(0.8807970779778823).epsilon(1e-14));

  std::mt19937_64 rng(1);
  const auto r = oracle::random_autoencoder(6, 4, rng);
  const Eigen::MatrixXd x = unit_random(30, 6, 2) * 4.0 - Eigen::MatrixXd::Constant(30, 6, 2.0);
  const auto h = encode_batch(x, r);
  const auto y = decode_batch(h, r);
  CHECK(h.minCoeff() > 0.0);
  CHECK(h.maxCoeff() < 1.0);
  CHECK(y.cols() == 6);
  CHECK(encode(Eigen::VectorXd(x.row(3).transpose()), r).isApprox(h.row(3).transpose(), 1e-15));

  CHECK_THROWS_AS(encode(Eigen::VectorXd::Zero(4).eval(), r), ShapeError);
  CHECK_THROWS_AS(decode(Eigen::VectorXd::Zero(6).eval(), r), ShapeError);
}

TEST_CASE("reconstruction gradient matches finite differences") {
  std::mt19937_64 rng(3);
  const auto p = oracle::random_autoencoder(5, 3, rng);
  const Eigen::MatrixXd clean = unit_random(7, 5, 4);
  Rng noise(5);
  const Eigen::MatrixXd noisy = mask_corrupt(clean, 0.25, noise);
  const auto r = oracle::check_autoencoder(p, noisy, clean);
  CHECK(r.max_relative_error < 1e-4);
  CHECK(r.parameters == 3 * 5 + 3 + 5 * 3 + 5);
}

TEST_CASE("mask_corrupt") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(200, 50);
  Rng rng(6);
  const auto y = mask_corrupt(x, 0.25, rng);
  const double zeroed = static_cast<double>((y.array() == 0.0).count()) / static_cast<double>(x.size());
  CHECK(zeroed == doctest::Approx(0.25).epsilon(0.05));
  CHECK(((y.array() == 0.0) || (y.array() == 1.0)).all());
  CHECK(mask_corrupt(x, 0.0, rng) == x);
}

TEST_CASE("pretrain_layer") {
  SUBCASE("identity rows are reconstructed once width matches input width") {
    const Eigen::MatrixXd data = Eigen::MatrixXd::Identity(10, 10);
    SdaeConfig cfg;
    cfg.corruption_fraction = 0;
    cfg.epochs = 500;
    cfg.learning_rate = 0.5;
    cfg.finetune.batch_size = 1;
    cfg.seed = 1;
    const auto ae = pretrain_layer(data, 10, cfg, 11);
    REQUIRE(ae.reconstruction_error.size() == 500);
    MESSAGE("identity reconstruction error " << ae.reconstruction_error.back());
    CHECK(ae.reconstruction_error.back() < 1e-2);
    CHECK(reconstruction_mse(ae.params, data) == ae.reconstruction_error.back());
    CHECK_THROWS_AS(reconstruction_mse(ae.params, data, data.topRows(3)), ShapeError);
  }
  SUBCASE("error descends on random data") {
    const Eigen::MatrixXd data = unit_random(200, 12, 7);
    SdaeConfig cfg;
    cfg.epochs = 40;
    cfg.learning_rate = 0.1;
    cfg.finetune.batch_size = 20;
    const auto ae = pretrain_layer(data, 6, cfg, 12);
    CHECK(ae.reconstruction_error.back() <= ae.reconstruction_error.front());
  }
  SUBCASE("same seed, same parameters") {
    const Eigen::MatrixXd data = unit_random(50, 8, 8);
    SdaeConfig cfg;
    cfg.epochs = 5;
    cfg.finetune.batch_size = 10;
    CHECK(pretrain_layer(data, 4, cfg, 13).params == pretrain_layer(data, 4, cfg, 13).params);
    CHECK(!(pretrain_layer(data, 4, cfg, 13).params == pretrain_layer(data, 4, cfg, 14).params));
  }
  SUBCASE("config validation") {
    SdaeConfig cfg;
    cfg.corruption_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("train_sdae") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 0.05);
  Eigen::MatrixXd x(200, 3);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const int c = i % 2;
    for (int j = 0; j < 3; ++j) x(i, j) = (c ? 0.75 : 0.25) + g(rng);
    y.push_back(c);
  }
  SdaeConfig cfg;
  cfg.epochs = 10;
  cfg.learning_rate = 0.1;
  cfg.seed = 3;
  cfg.finetune.batch_size = 10;
  cfg.finetune.finetune_learning_rate = 0.5;
  cfg.finetune.max_finetune_epochs = 100;

  SUBCASE("separable blobs") {
    cfg.layer_sizes = {6, 4};
    auto [model, report] = train_sdae(x, y, 2, InputKind::kFeatures22, cfg);
    CHECK(model.kind == ModelKind::kSdae);
    CHECK(model.layer_widths() == std::vector<int>{3, 6, 4, 2});
    CHECK(report.pretrain_reconstruction_error.size() == 2);
    CHECK(evaluate(model, x, y).accuracy >= 0.99);
    auto again = train_sdae(x, y, 2, InputKind::kFeatures22, cfg);
    CHECK(again.first == model);
  }
  SUBCASE("no hidden layers") {
    cfg.layer_sizes = {};
    auto [model, report] = train_sdae(x, y, 2, InputKind::kFeatures22, cfg);
    CHECK(model.network.layers.size() == 1);
    CHECK(evaluate(model, x, y).accuracy >= 0.99);
  }
}
