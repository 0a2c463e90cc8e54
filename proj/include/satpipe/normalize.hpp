#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace satpipe {

/// Per-column extrema of a feature matrix.
struct NormalizationStats {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  Eigen::Index dims() const { return min.size(); }
  bool operator==(const NormalizationStats& o) const { return min == o.min && max == o.max; }
};

enum class NormalizationMode {
  kSeparate,     ///< train and test each normalized with their own extrema (default)
  kTrainStats,   ///< test normalized with the training extrema
};

NormalizationStats fit_normalization(const Eigen::MatrixXd& matrix);

/// (F - min) / (max - min) per column; degenerate columns map to 0.
/// Foreign data outside the fitted range is not clamped.
Eigen::MatrixXd apply_normalization(const NormalizationStats& stats, const Eigen::MatrixXd& matrix);

inline Eigen::MatrixXd fit_apply_normalization(const Eigen::MatrixXd& matrix) {
  return apply_normalization(fit_normalization(matrix), matrix);
}

/// Normalizes a train/test pair according to `mode`.
void normalize_pair(Eigen::MatrixXd& train, Eigen::MatrixXd& test, NormalizationMode mode);

/// CSV rows `feature,min,max`.
void write_normalization_csv(const std::filesystem::path& path, const NormalizationStats& stats,
                             std::span<const std::string> names);
NormalizationStats read_normalization_csv(const std::filesystem::path& path);

}  // namespace satpipe
