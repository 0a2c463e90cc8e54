#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "satpipe/dbn.hpp"

namespace satpipe {

/// Class-conditional statistics of one feature and its separability
///
///   D_s = mean_{pairs c<c'} |mu_c - mu_c'|  /  mean_c sigma_c
///
/// with population standard deviations. When the denominator is below
/// kSeparabilityEpsilon, D_s is 0 for coincident means and +inf otherwise.
struct FeatureSeparability {
  std::vector<double> class_means;
  std::vector<double> class_stds;
  double delta_mean = 0;
  double delta_sigma = 0;
  double d_s = 0;
};

inline constexpr double kSeparabilityEpsilon = 1e-12;

struct SeparabilityReport {
  std::vector<int> classes;  ///< class ids present, ascending
  std::vector<FeatureSeparability> features;

  /// Averages over features (Table-4 style summary).
  double mean_delta_mean() const;
  double mean_delta_sigma() const;
  /// Mean D_s over features with a finite value.
  double mean_d_s() const;
};

/// Per-column separability of an n x d matrix.
SeparabilityReport separability(const Eigen::MatrixXd& values, std::span<const int> labels);

/// Separability of a single scalar per sample.
FeatureSeparability scalar_separability(const Eigen::VectorXd& values, std::span<const int> labels);

struct RankedFeature {
  std::string name;
  double delta_mean = 0;
  double delta_sigma = 0;
  double d_s = 0;
};

/// Descending D_s; ties broken by name.
struct FeatureRanking {
  std::vector<RankedFeature> entries;
};

FeatureRanking rank_features(const Eigen::MatrixXd& values, std::span<const int> labels,
                             std::span<const std::string> names);

void write_ranking_csv(const std::filesystem::path& path, const FeatureRanking& ranking);
nlohmann::json ranking_to_json(const FeatureRanking& ranking);

enum class LayerReduction {
  kSampleMean,    ///< D_s of the per-sample mean activation over the layer's units
  kUnitAverage,   ///< mean over units of each unit's own D_s
};

struct LayerSeparability {
  std::size_t layer = 0;  ///< 1-based hidden layer index
  Eigen::Index width = 0;
  FeatureSeparability separability;
};

/// One entry per hidden layer of the classifier.
std::vector<LayerSeparability> layer_separability(const ClassifierModel& model, const Eigen::MatrixXd& data,
                                                  std::span<const int> labels,
                                                  LayerReduction reduction = LayerReduction::kSampleMean);

struct IdOptions {
  int k = 10;
  int rounds = 10;
  Eigen::Index sample_size = 1000;
  std::uint64_t seed = 0;
};

struct IdEstimate {
  double dimension = 0;
  int k = 0;
  Eigen::Index sample_size = 0;
  std::vector<double> per_round;
  /// Exact duplicates removed before the neighbour search, summed over rounds.
  std::size_t duplicates_dropped = 0;
};

/// k-NN maximum-likelihood intrinsic dimension (Levina-Bickel with the
/// MacKay-Ghahramani pooling), averaged over seeded rounds of
/// min(sample_size, n) points drawn without replacement.
IdEstimate intrinsic_dimension(const Eigen::MatrixXd& points, const IdOptions& options = {});

/// MLE on exactly the given points (no sampling).
double mle_dimension(const Eigen::MatrixXd& points, int k);

/// Volume of the unit n-ball over the volume of its bounding cube
/// [-1, 1]^n: pi^(n/2) / (2^n Gamma(n/2 + 1)).
double hypersphere_relative_volume(int n);

}  // namespace satpipe
