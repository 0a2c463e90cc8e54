#include <random>

#include "doctest.h"
#include "oracle/finite_difference.hpp"
#include "satpipe/dbn.hpp"
#include "satpipe/errors.hpp"

using namespace satpipe;

namespace {

// Two Gaussian blobs in 2-D, mapped into [0, 1].
std::pair<Eigen::MatrixXd, std::vector<int>> blobs(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 0.05);
  Eigen::MatrixXd x(2 * per_class, 2);
  std::vector<int> y;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i % 2;
    x(i, 0) = (c ? 0.75 : 0.25) + g(rng);
    x(i, 1) = (c ? 0.7 : 0.3) + g(rng);
    y.push_back(c);
  }
  return {x, y};
}

ClassifierModel zero_head_model(int inputs, int classes) {
  ClassifierModel m;
  m.class_count = classes;
  m.network.layers.push_back({Eigen::MatrixXd::Zero(classes, inputs), Eigen::VectorXd::Zero(classes)});
  return m;
}

}  // namespace

TEST_CASE("backprop matches central finite differences") {
  std::mt19937_64 rng(1);
  const auto net = oracle::random_network({4, 5, 3, 3}, rng);
  Eigen::MatrixXd x = (Eigen::MatrixXd::Random(5, 4).array() * 0.5 + 0.5).matrix();
  const std::vector<int> labels = {0, 1, 2, 1, 0};
  const auto t = one_hot(labels, 3);
  for (double l2 : {0.0, 1e-4, 0.05}) {
    const auto r = oracle::check_network(net, x, t, l2);
    INFO("l2 = " << l2);
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.parameters == 5 * 4 + 5 + 3 * 5 + 3 + 3 * 3 + 3);
  }
}

TEST_CASE("init_classifier") {
  TrainConfig cfg;
  cfg.seed = 5;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<Rbm> stack{Rbm(6, 4), Rbm(4, 3)};
  for (auto& r : stack) {
    for (Eigen::Index k = 0; k < r.weights.size(); ++k) r.weights.data()[k] = g(rng);
    for (Eigen::Index k = 0; k < r.hidden_bias.size(); ++k) r.hidden_bias(k) = g(rng);
  }
  const auto m = init_classifier(stack, 6, 4, cfg);
  REQUIRE(m.network.layers.size() == 3);
  CHECK(m.network.layers[0].weights == stack[0].weights.transpose());
  CHECK(m.network.layers[1].weights == stack[1].weights.transpose());
  CHECK(m.network.layers[1].bias == stack[1].hidden_bias);
  CHECK(m.head().weights.rows() == 4);
  CHECK(m.head().weights.cols() == 3);
  CHECK(m.head().bias.isZero());
  CHECK(init_classifier(stack, 6, 4, cfg) == m);
  CHECK(m.layer_widths() == std::vector<int>{6, 4, 3, 4});
  CHECK_THROWS_AS(init_classifier(stack, 5, 4, cfg), ShapeError);
}

TEST_CASE("predict_proba and classify") {
  SUBCASE("zero head gives a uniform posterior and class 0") {
    const auto m = zero_head_model(3, 4);
    const auto p = predict_proba(m, Eigen::Vector3d(0.2, 0.9, 0.1));
    CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-15);
    CHECK(classify(m, Eigen::Vector3d(0.2, 0.9, 0.1)) == 0);
  }
  SUBCASE("argmax picks the largest posterior, lowest index on ties") {
    CHECK(argmax(Eigen::Vector3d(0.1, 0.7, 0.2)) == 1);
    CHECK(argmax(Eigen::Vector3d(0.4, 0.4, 0.2)) == 0);
  }
  std::mt19937_64 rng(3);
  ClassifierModel m;
  m.class_count = 3;
  m.network = oracle::random_network({5, 6, 3}, rng);
  const Eigen::MatrixXd x = (Eigen::MatrixXd::Random(1000, 5).array() * 0.5 + 0.5).matrix();
  SUBCASE("posteriors sum to one") {
    const auto p = predict_proba_batch(m, x);
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(p.minCoeff() > 0.0);
  }
  SUBCASE("classify agrees with the posterior argmax") {
    const auto p = predict_proba_batch(m, x);
    const auto c = classify_batch(m, x);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      Eigen::Index best = 0;
      p.row(r).maxCoeff(&best);
      CHECK(c[static_cast<std::size_t>(r)] == best);
    }
  }
  SUBCASE("two classes give complementary posteriors") {
    ClassifierModel two;
    two.class_count = 2;
    two.network = oracle::random_network({5, 4, 2}, rng);
    for (Eigen::Index r = 0; r < 20; ++r) {
      const auto p = predict_proba(two, x.row(r).transpose());
      CHECK(p(1) == doctest::Approx(1.0 - p(0)).epsilon(1e-12));
    }
  }
  SUBCASE("permuting output units permutes the posterior") {
    ClassifierModel perm = m;
    perm.network.layers.back().weights.row(0).swap(perm.network.layers.back().weights.row(2));
    std::swap(perm.network.layers.back().bias(0), perm.network.layers.back().bias(2));
    const auto a = predict_proba(m, x.row(0).transpose());
    const auto b = predict_proba(perm, x.row(0).transpose());
    CHECK(a(0) == doctest::Approx(b(2)).epsilon(1e-15));
    CHECK(a(1) == doctest::Approx(b(1)).epsilon(1e-15));
  }
  SUBCASE("shape mismatch") { CHECK_THROWS_AS(predict_proba(m, Eigen::Vector3d::Zero()), ShapeError); }
}

TEST_CASE("evaluate") {
  const auto [x, y] = blobs(20, 4);
  TrainConfig cfg;
  cfg.layer_sizes = {};
  cfg.finetune_learning_rate = 0.5;
  cfg.max_finetune_epochs = 50;
  cfg.batch_size = 10;
  auto [model, report] = train_dbn(x, y, 2, InputKind::kFeatures22, cfg);
  const auto e = evaluate(model, x, y);
  CHECK(e.confusion.sum() == 40);
  CHECK(e.accuracy == doctest::Approx(double(e.confusion.trace()) / 40.0));

  CHECK(e.accuracy >= 0.95);
}

TEST_CASE("finetune") {
  SUBCASE("separable blobs reach 99% training accuracy") {
    const auto [x, y] = blobs(100, 5);
    TrainConfig cfg;
    cfg.layer_sizes = {8};
    cfg.seed = 1;
    cfg.batch_size = 10;
    cfg.finetune_learning_rate = 0.5;
    cfg.max_finetune_epochs = 200;
    auto [model, report] = train_dbn(x, y, 2, InputKind::kFeatures22, cfg);
    CHECK(evaluate(model, x, y).accuracy >= 0.99);
    CHECK(report.best_epoch >= 1);
  }
  SUBCASE("XOR with four hidden units") {
    Eigen::MatrixXd x(400, 2);
    std::vector<int> y;
    for (int i = 0; i < 400; ++i) {
      const int a = i % 2, b = (i / 2) % 2;
      x(i, 0) = a;
      x(i, 1) = b;
      y.push_back(a ^ b);
    }
    TrainConfig cfg;
    cfg.layer_sizes = {4};
    cfg.rbm_epochs = 5;
    cfg.seed = 2;
    cfg.batch_size = 20;
    cfg.finetune_learning_rate = 0.5;
    cfg.head_init_std = 0.5;
    cfg.max_finetune_epochs = 500;
    cfg.early_stopping_patience = 100;
    auto [model, report] = train_dbn(x, y, 2, InputKind::kFeatures22, cfg);
    MESSAGE("XOR stopped after " << report.epochs.size() << " epochs");
    CHECK(evaluate(model, x, y).accuracy >= 0.99);
  }
  SUBCASE("single-class labels are rejected") {
    const auto m = zero_head_model(2, 2);
    const std::vector<int> y(10, 1);
    CHECK_THROWS_AS(finetune(m, Eigen::MatrixXd::Zero(10, 2), y, TrainConfig{}), DegenerateLabelError);
  }
  SUBCASE("report logs every epoch and the best snapshot") {
    const auto [x, y] = blobs(50, 6);
    TrainConfig cfg;
    cfg.max_finetune_epochs = 15;
    cfg.finetune_learning_rate = 0.2;
    const auto m = init_classifier({}, 2, 2, cfg);
    auto [trained, report] = finetune(m, x, y, cfg);
    CHECK(report.epochs.size() == 15);
    CHECK(report.best_epoch >= 1);
    CHECK(report.best_epoch <= 15);
    for (const auto& e : report.epochs) CHECK(e.validation_error <= 1.0);
  }
  SUBCASE("training is deterministic") {
    const auto [x, y] = blobs(60, 7);
    TrainConfig cfg;
    cfg.layer_sizes = {5, 4};
    cfg.rbm_epochs = 4;
    cfg.max_finetune_epochs = 10;
    cfg.seed = 77;
    auto a = train_dbn(x, y, 2, InputKind::kFeatures22, cfg);
    auto b = train_dbn(x, y, 2, InputKind::kFeatures22, cfg);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
}
