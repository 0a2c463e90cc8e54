#include "satpipe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "satpipe/errors.hpp"
#include "satpipe/random.hpp"

namespace satpipe {

namespace {

struct ClassIndex {
  std::vector<int> classes;
  std::vector<std::size_t> slot;  // per sample, index into classes
  std::vector<std::size_t> counts;
};

ClassIndex index_classes(std::span<const int> labels) {
  const std::set<int> present(labels.begin(), labels.end());
  if (present.size() < 2) throw ClassCountError("separability needs at least 2 classes");
  ClassIndex ci;
  ci.classes.assign(present.begin(), present.end());
  std::map<int, std::size_t> lookup;
  for (std::size_t i = 0; i < ci.classes.size(); ++i) lookup[ci.classes[i]] = i;
  ci.counts.assign(ci.classes.size(), 0);
  ci.slot.reserve(labels.size());
  for (int l : labels) {
    ci.slot.push_back(lookup[l]);
    ++ci.counts[ci.slot.back()];
  }
  return ci;
}

FeatureSeparability column_separability(const Eigen::Ref<const Eigen::VectorXd>& col, const ClassIndex& ci) {
  const std::size_t k = ci.classes.size();
  FeatureSeparability f;
  f.class_means.assign(k, 0.0);
  f.class_stds.assign(k, 0.0);
  for (Eigen::Index i = 0; i < col.size(); ++i) f.class_means[ci.slot[static_cast<std::size_t>(i)]] += col(i);
  for (std::size_t c = 0; c < k; ++c) f.class_means[c] /= static_cast<double>(ci.counts[c]);
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    const std::size_t c = ci.slot[static_cast<std::size_t>(i)];
    const double d = col(i) - f.class_means[c];
    f.class_stds[c] += d * d;
  }
  for (std::size_t c = 0; c < k; ++c) f.class_stds[c] = std::sqrt(f.class_stds[c] / static_cast<double>(ci.counts[c]));

  double pair_sum = 0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b, ++pairs) pair_sum += std::abs(f.class_means[a] - f.class_means[b]);
  f.delta_mean = pair_sum / static_cast<double>(pairs);
  f.delta_sigma = std::accumulate(f.class_stds.begin(), f.class_stds.end(), 0.0) / static_cast<double>(k);
  if (f.delta_sigma > kSeparabilityEpsilon) {
    f.d_s = f.delta_mean / f.delta_sigma;
  } else {
    f.d_s = f.delta_mean > kSeparabilityEpsilon ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return f;
}

}  // namespace

double SeparabilityReport::mean_delta_mean() const {
  double s = 0;
  for (const auto& f : features) s += f.delta_mean;
  return features.empty() ? 0.0 : s / static_cast<double>(features.size());
}

double SeparabilityReport::mean_delta_sigma() const {
  double s = 0;
  for (const auto& f : features) s += f.delta_sigma;
  return features.empty() ? 0.0 : s / static_cast<double>(features.size());
}

double SeparabilityReport::mean_d_s() const {
  double s = 0;
  std::size_t n = 0;
  for (const auto& f : features)
    if (std::isfinite(f.d_s)) {
      s += f.d_s;
      ++n;
    }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

SeparabilityReport separability(const Eigen::MatrixXd& values, std::span<const int> labels) {
  if (static_cast<std::size_t>(values.rows()) != labels.size()) throw ShapeError("value rows differ from labels");
  const auto ci = index_classes(labels);
  SeparabilityReport r;
  r.classes = ci.classes;
  r.features.reserve(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index c = 0; c < values.cols(); ++c) r.features.push_back(column_separability(values.col(c), ci));
  return r;
}

FeatureSeparability scalar_separability(const Eigen::VectorXd& values, std::span<const int> labels) {
  if (static_cast<std::size_t>(values.size()) != labels.size()) throw ShapeError("value count differs from labels");
  return column_separability(values, index_classes(labels));
}

FeatureRanking rank_features(const Eigen::MatrixXd& values, std::span<const int> labels,
                             std::span<const std::string> names) {
  if (static_cast<Eigen::Index>(names.size()) != values.cols()) throw ShapeError("name count differs from columns");
  const auto report = separability(values, labels);
  FeatureRanking ranking;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& f = report.features[i];
    ranking.entries.push_back({names[i], f.delta_mean, f.delta_sigma, f.d_s});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.d_s != b.d_s) return a.d_s > b.d_s;
    return a.name < b.name;
  });
  return ranking;
}

void write_ranking_csv(const std::filesystem::path& path, const FeatureRanking& ranking) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "rank,feature,delta_mean,delta_sigma,d_s\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& e = ranking.entries[i];
    out << i + 1 << ',' << e.name << ',' << e.delta_mean << ',' << e.delta_sigma << ',' << e.d_s << '\n';
  }
}

nlohmann::json ranking_to_json(const FeatureRanking& ranking) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& e = ranking.entries[i];
    rows.push_back({{"rank", i + 1},
                    {"feature", e.name},
                    {"delta_mean", e.delta_mean},
                    {"delta_sigma", e.delta_sigma},
                    {"d_s", std::isfinite(e.d_s) ? nlohmann::json(e.d_s) : nlohmann::json("inf")}});
  }
  return rows;
}

std::vector<LayerSeparability> layer_separability(const ClassifierModel& model, const Eigen::MatrixXd& data,
                                                  std::span<const int> labels, LayerReduction reduction) {
  const auto acts = forward_all(model.network, data);
  std::vector<LayerSeparability> out;
  // acts[0] is the input, the last entry the head; hidden layers lie between.
  for (std::size_t l = 1; l + 1 < acts.size(); ++l) {
    LayerSeparability ls;
    ls.layer = l;
    ls.width = acts[l].cols();
    if (reduction == LayerReduction::kSampleMean) {
      ls.separability = scalar_separability(acts[l].rowwise().mean(), labels);
    } else {
      const auto report = separability(acts[l], labels);
      FeatureSeparability avg;
      for (const auto& f : report.features) {
        avg.delta_mean += f.delta_mean;
        avg.delta_sigma += f.delta_sigma;
      }
      avg.delta_mean /= static_cast<double>(report.features.size());
      avg.delta_sigma /= static_cast<double>(report.features.size());
      avg.d_s = report.mean_d_s();
      ls.separability = avg;
    }
    out.push_back(std::move(ls));
  }
  return out;
}

double mle_dimension(const Eigen::MatrixXd& points, int k) {
  const Eigen::Index n = points.rows();
  if (k < 2) throw ConfigError("intrinsic dimension needs k >= 2");
  if (n <= k) throw SizeError("intrinsic dimension needs more than k points");
  const Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
  const Eigen::VectorXd sq = centered.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * centered * centered.transpose();
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(k));
  double log_ratio_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::swap(idx[static_cast<std::size_t>(i)], idx.back());
    idx.pop_back();
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
      return d2(i, a) != d2(i, b) ? d2(i, a) < d2(i, b) : a < b;
    });
    // Exact distances for the selected neighbours; the Gram form loses
    // precision for close pairs.
    for (int j = 0; j < k; ++j) dist[static_cast<std::size_t>(j)] = (centered.row(i) - centered.row(idx[static_cast<std::size_t>(j)])).norm();
    std::sort(dist.begin(), dist.end());
    idx.resize(static_cast<std::size_t>(n));
    if (dist.front() <= 0) throw DomainError("duplicate points reached the neighbour search");
    double s = 0;
    for (int j = 0; j + 1 < k; ++j) s += std::log(dist[static_cast<std::size_t>(k - 1)] / dist[static_cast<std::size_t>(j)]);
    log_ratio_sum += s / static_cast<double>(k - 1);
  }
  const double mean_log_ratio = log_ratio_sum / static_cast<double>(n);
  if (!(mean_log_ratio > 0)) throw NumericError("degenerate neighbour distances in intrinsic dimension estimate");
  return 1.0 / mean_log_ratio;
}

IdEstimate intrinsic_dimension(const Eigen::MatrixXd& points, const IdOptions& options) {
  const Eigen::Index n = points.rows();
  if (options.k < 2) throw ConfigError("intrinsic dimension needs k >= 2");
  if (n <= options.k) throw SizeError("intrinsic dimension needs more than k points (n=" + std::to_string(n) + ")");
  if (!points.allFinite()) throw DomainError("intrinsic dimension needs finite points");
  if (options.rounds < 1) throw ConfigError("rounds must be >= 1");

  IdEstimate est;
  est.k = options.k;
  est.sample_size = std::min(options.sample_size, n);
  for (int round = 0; round < options.rounds; ++round) {
    Rng rng = make_rng(derive_seed(options.seed, static_cast<std::uint64_t>(round)), streams::kIntrinsicDim);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < est.sample_size; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    order.resize(static_cast<std::size_t>(est.sample_size));

    // Drop exact duplicates (first occurrence kept).
    std::vector<Eigen::Index> sorted = order;
    std::sort(sorted.begin(), sorted.end(), [&](Eigen::Index a, Eigen::Index b) {
      for (Eigen::Index c = 0; c < points.cols(); ++c)
        if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
      return a < b;
    });
    std::set<Eigen::Index> dup;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (points.row(sorted[i]) == points.row(sorted[i - 1])) dup.insert(sorted[i]);
    std::vector<Eigen::Index> kept;
    for (auto i : order)
      if (!dup.count(i)) kept.push_back(i);
    est.duplicates_dropped += dup.size();
    if (static_cast<Eigen::Index>(kept.size()) <= options.k)
      throw SizeError("too few distinct points for intrinsic dimension after dropping duplicates");

    est.per_round.push_back(mle_dimension(points(kept, Eigen::all), options.k));
  }
  est.dimension = std::accumulate(est.per_round.begin(), est.per_round.end(), 0.0) / static_cast<double>(est.per_round.size());
  return est;
}

double hypersphere_relative_volume(int n) {
  if (n < 1) throw DomainError("hypersphere dimension must be >= 1");
  const double half = 0.5 * n;
  return std::exp(half * std::log(std::numbers::pi) - n * std::log(2.0) - std::lgamma(half + 1.0));
}

}  // namespace satpipe
