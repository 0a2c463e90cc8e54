#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracle/feature_oracle.hpp"
#include "satpipe/errors.hpp"
#include "satpipe/features.hpp"

using namespace satpipe;

namespace {

Patch uniform_patch(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t nir) {
  Patch p;
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      p.at(Band::kRed, y, x) = r;
      p.at(Band::kGreen, y, x) = g;
      p.at(Band::kBlue, y, x) = b;
      p.at(Band::kNir, y, x) = nir;
    }
  return p;
}

Patch random_patch(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> byte(0, 255);
  Patch p;
  for (auto& s : p.samples()) s = static_cast<std::uint8_t>(byte(rng));
  return p;
}

ScaledPlanes constant_planes(double nir, double red, double blue) {
  ScaledPlanes s;
  s.nir = Plane::Constant(4, 4, nir);
  s.red = Plane::Constant(4, 4, red);
  s.blue = Plane::Constant(4, 4, blue);
  s.green = Plane::Zero(4, 4);
  return s;
}

}  // namespace

TEST_CASE("rgb_to_hsi") {
  SUBCASE("achromatic pixel") {
    const auto [h, s, i] = rgb_to_hsi_pixel(100 / 255.0, 100 / 255.0, 100 / 255.0);
    CHECK(h == 0.0);
    CHECK(s == 0.0);
    CHECK(i == doctest::Approx(100 / 255.0).epsilon(1e-15));
  }
  SUBCASE("pure red") {
    const auto [h, s, i] = rgb_to_hsi_pixel(1.0, 0.0, 0.0);
    CHECK(h == 0.0);
    CHECK(s == 1.0);
    CHECK(i == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("pure green sits at a third of the hue circle") {
    const auto [h, s, i] = rgb_to_hsi_pixel(0.0, 1.0, 0.0);
    CHECK(h == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s == 1.0);
    CHECK(i == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("black pixel has zero saturation") {
    const auto [h, s, i] = rgb_to_hsi_pixel(0, 0, 0);
    CHECK(h == 0.0);
    CHECK(s == 0.0);
    CHECK(i == 0.0);
  }
  SUBCASE("planes stay in range on random patches") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
      const auto planes = rgb_to_hsi(random_patch(rng));
      CHECK(planes.hue.minCoeff() >= 0.0);
      CHECK(planes.hue.maxCoeff() < 1.0);
      CHECK(planes.saturation.minCoeff() >= 0.0);
      CHECK(planes.saturation.maxCoeff() <= 1.0 + 1e-15);
      CHECK(planes.intensity.maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("quantize uses uniform bins with an upper clamp") {
  Plane p(1, 3);
  p << 0.0, 1.0, 0.5;
  const auto q = quantize(p, 8);
  CHECK(q(0, 0) == 0);
  CHECK(q(0, 1) == 7);
  CHECK(q(0, 2) == 4);
}

TEST_CASE("cooccurrence") {
  FeatureConfig cfg;
  SUBCASE("constant plane concentrates on the diagonal cell") {
    const QuantizedPlane q = QuantizedPlane::Constant(5, 5, 3);
    const auto c = cooccurrence(q, cfg);
    CHECK(c.cells(3, 3) == 1.0);
    CHECK(c.cells.sum() == 1.0);
  }
  SUBCASE("two-column plane, brute-force pair count") {
    cfg.levels = 2;
    QuantizedPlane q(2, 2);
    q << 0, 1, 0, 1;
    const auto c = cooccurrence(q, cfg);
    CHECK(c.cells(0, 1) == 0.5);
    CHECK(c.cells(1, 0) == 0.5);
    CHECK(c.cells(0, 0) == 0.0);
    CHECK(c.cells(1, 1) == 0.0);
  }
  SUBCASE("random planes give symmetric unit-mass matrices") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> bin(0, 7);
    cfg.offsets = {{0, 1}, {1, 0}, {1, 1}, {-1, 2}};
    for (int t = 0; t < 20; ++t) {
      QuantizedPlane q(9, 7);
      for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = bin(rng);
      const auto c = cooccurrence(q, cfg);
      CHECK(std::abs(c.cells.sum() - 1.0) < 1e-9);
      CHECK(c.cells == c.cells.transpose());
    }
  }
  SUBCASE("offset beyond the plane is a geometry error") {
    cfg.offsets = {{0, 5}};
    CHECK_THROWS_AS(cooccurrence(QuantizedPlane::Zero(5, 5), cfg), GeometryError);
  }
  SUBCASE("zero offset is rejected") {
    cfg.offsets = {{0, 0}};
    CHECK_THROWS_AS(cooccurrence(QuantizedPlane::Zero(5, 5), cfg), ConfigError);
  }
}

TEST_CASE("ccm_stats") {
  SUBCASE("point mass at bin k") {
    CooccurrenceMatrix c{Eigen::MatrixXd::Zero(8, 8)};
    c.cells(4, 4) = 1.0;  // 1-based bin 5
    const auto s = ccm_stats(c);
    CHECK(s.mean == 5.0);
    CHECK(s.autoc == 25.0);
    CHECK(s.sosvh == 0.0);
    CHECK(s.second_moment == 1.0);
    CHECK(s.covariance == 0.0);
  }
  SUBCASE("uniform 2x2") {
    CooccurrenceMatrix c{Eigen::MatrixXd::Constant(2, 2, 0.25)};
    const auto s = ccm_stats(c);
    CHECK(s.second_moment == 0.25);
    CHECK(s.mean == 1.5);
    CHECK(s.covariance == 0.0);
  }
  SUBCASE("checkerboard") {
    CooccurrenceMatrix c{Eigen::MatrixXd::Zero(2, 2)};
    c.cells(0, 1) = c.cells(1, 0) = 0.5;
    const auto s = ccm_stats(c);
    CHECK(s.covariance == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(s.autoc == 2.0);
  }
  SUBCASE("extras on a point mass") {
    CooccurrenceMatrix c{Eigen::MatrixXd::Zero(3, 3)};
    c.cells(1, 1) = 1.0;
    const auto e = ccm_extras(c);
    CHECK(e.entropy == 0.0);
    CHECK(e.homogeneity == 1.0);
    CHECK(e.contrast == 0.0);
    CHECK(e.max_probability == 1.0);
  }
}

TEST_CASE("channel_stats") {
  SUBCASE("constant plane") {
    const auto s = channel_stats(Plane::Constant(3, 3, 0.4));
    CHECK(s.mean == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(s.std == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.variance < 1e-30);
    CHECK(s.second_moment == doctest::Approx(0.16).epsilon(1e-15));
  }
  SUBCASE("two-point distribution") {
    Plane p(1, 4);
    p << 0, 1, 0, 1;
    const auto s = channel_stats(p);
    CHECK(s.mean == 0.5);
    CHECK(s.variance == 0.25);
    CHECK(s.second_moment == 0.5);
  }
  SUBCASE("second moment identity on random planes") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 50; ++t) {
      Plane p(28, 28);
      for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = u(rng);
      const auto s = channel_stats(p);
      CHECK(std::abs(s.second_moment - (s.variance + s.mean * s.mean)) < 1e-12);
    }
  }
  SUBCASE("empty plane") { CHECK_THROWS_AS(channel_stats(Plane(0, 0)), SizeError); }
}

TEST_CASE("vegetation indices") {
  SUBCASE("ndvi") {
    CHECK(ndvi(constant_planes(0.3, 0.3, 0.1)) == 0.0);
    CHECK(ndvi(constant_planes(150 / 255.0, 50 / 255.0, 0)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ndvi(constant_planes(1.0, 0.0, 0.0)) == 1.0);
    CHECK(ndvi(constant_planes(0.0, 0.0, 0.0)) == 0.0);
  }
  SUBCASE("evi") {
    CHECK(evi(constant_planes(0.4, 0.4, 0.2)) == 0.0);
    CHECK(evi(constant_planes(0.5, 0.2, 0.1)) == doctest::Approx(0.3846153846153846).epsilon(1e-14));
    EviCoefficients doubled;
    doubled.gain = 5.0;
    CHECK(evi(constant_planes(0.5, 0.2, 0.1), doubled) ==
          doctest::Approx(2.0 * evi(constant_planes(0.5, 0.2, 0.1))).epsilon(1e-15));
  }
  SUBCASE("arvi as printed") {
    CHECK(arvi(constant_planes(0.5, 0.2, 0.1)) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(std::abs(arvi(constant_planes(0.3, 0.2, 0.1))) < 1e-15);
    CHECK(arvi(constant_planes(0.7, 0.2, 0.0)) == doctest::Approx((0.7 - 0.4) / (0.7 + 0.4)).epsilon(1e-15));
  }
  SUBCASE("simple ratio") {
    CHECK(simple_ratio(constant_planes(0.4, 0.4, 0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(simple_ratio(constant_planes(0.6, 0.2, 0)) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(simple_ratio(constant_planes(0.0, 0.2, 0)) == 0.0);
  }
  SUBCASE("ndvi and arvi stay in [-1, 1] on random byte patches") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 30; ++t) {
      const auto planes = rgb_to_hsi(random_patch(rng));
      const double n = ndvi(planes), a = arvi(planes), e = evi(planes);
      CHECK(std::abs(n) <= 1.0);
      CHECK(std::abs(a) <= 1.0);
      CHECK(std::isfinite(e));
    }
  }
}

TEST_CASE("dct feature") {
  SUBCASE("constant plane has only DC energy") {
    CHECK(dct_feature(Plane::Constant(28, 28, 0.7)) < 1e-14);
  }
  SUBCASE("single cosine basis function") {
    const int n = 28, u = 3, v = 5;
    Plane p(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        p(y, x) = std::sqrt(2.0 / n) * std::cos(std::numbers::pi * (2 * y + 1) * u / (2.0 * n)) * std::sqrt(2.0 / n) *
                  std::cos(std::numbers::pi * (2 * x + 1) * v / (2.0 * n));
    CHECK(dct_feature(p) == doctest::Approx(1.0 / (28 * 28 - 1)).epsilon(1e-9));
  }
  SUBCASE("Parseval") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    Plane p(28, 28);
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = u(rng);
    CHECK(std::abs(dct2(p).squaredNorm() - p.squaredNorm()) < 1e-9);
  }
}

TEST_CASE("extract") {
  SUBCASE("constant gray patch") {
    const auto f = extract(uniform_patch(90, 90, 90, 90));
    CHECK(f[Feature::kHStd] == 0.0);
    CHECK(f[Feature::kIVariance] < 1e-30);
    CHECK(f[Feature::kIStd] < 1e-15);
    CHECK(f[Feature::kNirStd] < 1e-15);
    CHECK(f[Feature::kNdvi] == 0.0);
    CHECK(f[Feature::kHCcmSosvh] == 0.0);
    CHECK(f[Feature::kICcmCovariance] == 0.0);
    CHECK(f[Feature::kDct] < 1e-14);
  }
  SUBCASE("pure and deterministic") {
    std::mt19937_64 rng(4);
    const auto p = random_patch(rng);
    CHECK(extract(p) == extract(p));
  }
  SUBCASE("matches the brute-force oracle") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
      const auto p = random_patch(rng);
      const auto f = extract(p);
      const auto o = oracle::features(p);
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        INFO("feature " << kFeatureNames[k]);
        CHECK(std::abs(f.values[k] - o[k]) <= 1e-9 * std::max(1.0, std::abs(o[k])));
      }
    }
  }
  SUBCASE("all features finite") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 10; ++t)
      for (double v : extract(random_patch(rng)).values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("extract_batch") {
  const auto ds = generate_synthetic(default_synthetic_spec(4, 10), 1);
  SUBCASE("single patch equals extract") {
    Dataset one = ds;
    one.patches.resize(1);
    one.labels.resize(1);
    const auto m = extract_batch(one, {}, 1);
    REQUIRE(m.rows() == 1);
    const auto f = extract(one.patches[0]);
    for (std::size_t k = 0; k < kFeatureCount; ++k) CHECK(m(0, static_cast<Eigen::Index>(k)) == f.values[k]);
  }
  SUBCASE("worker count does not change the result") {
    const auto serial = extract_batch(ds, {}, 1);
    CHECK(serial == extract_batch(ds, {}, 3));
    CHECK(serial == extract_batch(ds, {}, 8));
  }
  SUBCASE("extended pool starts with the 22 features") {
    const auto ext = extract_extended_batch(ds, {}, 2);
    CHECK(ext.cols() == static_cast<Eigen::Index>(extended_feature_names().size()));
    CHECK(ext.leftCols(kFeatureCount) == extract_batch(ds, {}, 1));
  }
  SUBCASE("empty dataset") { CHECK_THROWS_AS(extract_batch(Dataset{}, {}), SizeError); }
}

TEST_CASE("10,000 patches extract within 30 s") {
  const auto ds = generate_synthetic(default_synthetic_spec(4, 2500), 2);
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = extract_batch(ds, {});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("10k extraction took " << secs << " s");
  CHECK(m.rows() == 10000);
  CHECK(secs < 30.0);
}

TEST_CASE("feature CSV round trip") {
  const auto ds = generate_synthetic(default_synthetic_spec(4, 3), 1);
  const auto m = extract_batch(ds, {});
  const auto path = std::filesystem::temp_directory_path() / "satpipe_features.csv";
  const auto names = feature_names();
  write_feature_csv(path, m, ds.labels, names);
  std::vector<std::string> read_names;
  auto [back, labels] = read_feature_csv(path, &read_names);
  CHECK(back == m);
  CHECK(labels == ds.labels);
  CHECK(read_names == names);
}
