#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "satpipe/patchio.hpp"

namespace satpipe {

/// Row = y, column = x.
using Plane = Eigen::MatrixXd;
using QuantizedPlane = Eigen::MatrixXi;
/// n x d, one row per patch.
using FeatureMatrix = Eigen::MatrixXd;

/// HSI planes plus the [0,1]-scaled source bands used by the indices.
struct ScaledPlanes {
  Plane hue;         ///< [0, 1), linear, 0 on achromatic pixels
  Plane saturation;  ///< [0, 1]
  Plane intensity;   ///< [0, 1]
  Plane nir;
  Plane red;
  Plane green;
  Plane blue;
};

struct EviCoefficients {
  double gain = 2.5;
  double c_red = 6.0;
  double c_blue = 7.5;
  double soil = 1.0;
};

struct PixelOffset {
  int dy = 0;
  int dx = 1;
};

struct FeatureConfig {
  int levels = 8;
  std::vector<PixelOffset> offsets = {PixelOffset{0, 1}};
  EviCoefficients evi;
  double epsilon = 1e-12;

  void validate() const;
};

/// Normalized, symmetric co-occurrence counts of a quantized plane.
struct CooccurrenceMatrix {
  Eigen::MatrixXd cells;
  int levels() const { return static_cast<int>(cells.rows()); }
};

/// Haralick-style statistics with 1-based bin indices.
struct CcmStats {
  double mean = 0;
  double autoc = 0;
  double sosvh = 0;
  double second_moment = 0;
  double covariance = 0;
};

/// Statistics outside the 22-feature vector; candidates for ranking only.
struct CcmExtras {
  double entropy = 0;
  double homogeneity = 0;
  double contrast = 0;
  double max_probability = 0;
};

struct ChannelStats {
  double mean = 0;
  double std = 0;
  double variance = 0;
  double second_moment = 0;
};

inline constexpr std::size_t kFeatureCount = 22;

/// Feature names, ordered by separability rank on SAT-6.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "i_ccm_mean",  "h_ccm_sosvh", "h_ccm_autoc",         "s_ccm_mean",          "h_ccm_mean",      "sr",
    "s_ccm_second_moment",        "i_ccm_second_moment", "i_second_moment",     "i_variance",      "nir_std",
    "i_std",       "h_std",       "h_mean",              "i_mean",              "s_mean",          "i_ccm_covariance",
    "nir_mean",    "arvi",        "ndvi",                "dct",                 "evi"};

enum class Feature : std::size_t {
  kICcmMean,
  kHCcmSosvh,
  kHCcmAutoc,
  kSCcmMean,
  kHCcmMean,
  kSr,
  kSCcmSecondMoment,
  kICcmSecondMoment,
  kISecondMoment,
  kIVariance,
  kNirStd,
  kIStd,
  kHStd,
  kHMean,
  kIMean,
  kSMean,
  kICcmCovariance,
  kNirMean,
  kArvi,
  kNdvi,
  kDct,
  kEvi,
};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  bool operator==(const FeatureVector&) const = default;
};

std::vector<std::string> feature_names();

ScaledPlanes rgb_to_hsi(const Patch& patch);

/// Single-pixel conversion on [0,1] inputs; returns {H, S, I}.
std::array<double, 3> rgb_to_hsi_pixel(double r, double g, double b);

/// bin = min(floor(value * levels), levels - 1).
QuantizedPlane quantize(const Plane& plane, int levels);

CooccurrenceMatrix cooccurrence(const QuantizedPlane& qplane, const FeatureConfig& config);

CcmStats ccm_stats(const CooccurrenceMatrix& ccm);
CcmExtras ccm_extras(const CooccurrenceMatrix& ccm);

ChannelStats channel_stats(const Plane& plane);

// Vegetation indices: per-pixel values averaged over the patch.
double ndvi(const ScaledPlanes& planes, double epsilon = 1e-12);
double evi(const ScaledPlanes& planes, const EviCoefficients& coeffs = {}, double epsilon = 1e-12);
/// (NIR - (2 Red - Blue)) / (NIR + (2 Red + Blue)), denominator as printed in
/// the DeepSat formulation rather than the usual NIR + (2 Red - Blue).
double arvi(const ScaledPlanes& planes, double epsilon = 1e-12);
/// NIR / (Red + epsilon).
double simple_ratio(const ScaledPlanes& planes, double epsilon = 1e-12);

/// Orthonormal 2-D DCT-II.
Eigen::MatrixXd dct2(const Plane& plane);
/// Mean |coefficient| of dct2(intensity), DC term excluded.
double dct_feature(const Plane& intensity);

FeatureVector extract(const Patch& patch, const FeatureConfig& config = {});

/// Rows follow dataset order. `workers == 0` uses the hardware concurrency;
/// the result does not depend on the worker count.
FeatureMatrix extract_batch(const Dataset& dataset, const FeatureConfig& config = {}, unsigned workers = 0);

/// The 22 features followed by the CCM extras (entropy, homogeneity,
/// contrast, max probability) of H, S and I: a 34-column candidate pool.
std::vector<std::string> extended_feature_names();
std::vector<double> extract_extended(const Patch& patch, const FeatureConfig& config = {});
FeatureMatrix extract_extended_batch(const Dataset& dataset, const FeatureConfig& config = {}, unsigned workers = 0);

/// Raw pixels scaled by 1/255, plane-sequential: n x (4 * w * h).
FeatureMatrix pixel_matrix(const Dataset& dataset);

/// CSV with a leading `label` column and one column per feature name.
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& features, std::span<const int> labels,
                       std::span<const std::string> names);
std::pair<FeatureMatrix, std::vector<int>> read_feature_csv(const std::filesystem::path& path,
                                                            std::vector<std::string>* names = nullptr);

}  // namespace satpipe
