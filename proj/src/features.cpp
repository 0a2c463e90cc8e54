#include "satpipe/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "satpipe/errors.hpp"

namespace satpipe {

namespace {

// Keeps the sign of the denominator; |den| below eps is lifted to eps.
double guarded(double den, double eps) {
  if (std::abs(den) >= eps) return den;
  return den < 0 ? -eps : eps;
}

Plane scaled_band(const Patch& patch, Band band) {
  Plane plane(patch.height(), patch.width());
  for (int y = 0; y < patch.height(); ++y)
    for (int x = 0; x < patch.width(); ++x) plane(y, x) = patch.at(band, y, x) / 255.0;
  return plane;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename RowFn>
FeatureMatrix run_batch(const Dataset& dataset, std::size_t cols, unsigned workers, RowFn&& row_fn) {
  const std::size_t n = dataset.size();
  FeatureMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) row_fn(i, out.row(static_cast<Eigen::Index>(i)));
  };
  if (workers <= 1) {
    work(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back(work, begin, end);
  }
  return out;
}

}  // namespace

void FeatureConfig::validate() const {
  if (levels < 2) throw ConfigError("co-occurrence levels must be >= 2");
  if (offsets.empty()) throw ConfigError("at least one co-occurrence offset is required");
  for (const auto& o : offsets)
    if (o.dx == 0 && o.dy == 0) throw ConfigError("co-occurrence offsets must be nonzero");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
}

std::vector<std::string> feature_names() { return {kFeatureNames.begin(), kFeatureNames.end()}; }

std::array<double, 3> rgb_to_hsi_pixel(double r, double g, double b) {
  const double sum = r + g + b;
  const double intensity = sum / 3.0;
  const double saturation = sum > 0 ? 1.0 - 3.0 * std::min({r, g, b}) / sum : 0.0;
  double hue = 0.0;
  if (!(r == g && g == b)) {
    const double num = 0.5 * ((r - g) + (r - b));
    const double den = std::sqrt((r - g) * (r - g) + (r - b) * (g - b));
    const double theta = std::acos(std::clamp(num / den, -1.0, 1.0));
    hue = (b > g ? 2.0 * std::numbers::pi - theta : theta) / (2.0 * std::numbers::pi);
    if (hue >= 1.0) hue = 0.0;
  }
  return {hue, saturation, intensity};
}

ScaledPlanes rgb_to_hsi(const Patch& patch) {
  ScaledPlanes out;
  out.red = scaled_band(patch, Band::kRed);
  out.green = scaled_band(patch, Band::kGreen);
  out.blue = scaled_band(patch, Band::kBlue);
  out.nir = scaled_band(patch, Band::kNir);
  out.hue.resize(patch.height(), patch.width());
  out.saturation.resize(patch.height(), patch.width());
  out.intensity.resize(patch.height(), patch.width());
  for (Eigen::Index y = 0; y < out.red.rows(); ++y) {
    for (Eigen::Index x = 0; x < out.red.cols(); ++x) {
      const auto [h, s, i] = rgb_to_hsi_pixel(out.red(y, x), out.green(y, x), out.blue(y, x));
      out.hue(y, x) = h;
      out.saturation(y, x) = s;
      out.intensity(y, x) = i;
    }
  }
  return out;
}

QuantizedPlane quantize(const Plane& plane, int levels) {
  if (levels < 2) throw ConfigError("levels must be >= 2");
  return plane.unaryExpr([levels](double v) {
    const int bin = static_cast<int>(std::floor(v * levels));
    return std::clamp(bin, 0, levels - 1);
  });
}

CooccurrenceMatrix cooccurrence(const QuantizedPlane& q, const FeatureConfig& config) {
  config.validate();
  const int levels = config.levels;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(levels, levels);
  const auto rows = static_cast<int>(q.rows());
  const auto cols = static_cast<int>(q.cols());
  for (const auto& off : config.offsets) {
    if (std::abs(off.dy) >= rows || std::abs(off.dx) >= cols)
      throw GeometryError("co-occurrence offset (" + std::to_string(off.dy) + "," + std::to_string(off.dx) +
                          ") reaches beyond a " + std::to_string(rows) + "x" + std::to_string(cols) + " plane");
    for (int y = std::max(0, -off.dy); y < std::min(rows, rows - off.dy); ++y) {
      for (int x = std::max(0, -off.dx); x < std::min(cols, cols - off.dx); ++x) {
        const int a = q(y, x);
        const int b = q(y + off.dy, x + off.dx);
        if (a < 0 || a >= levels || b < 0 || b >= levels) throw DomainError("quantized value outside [0, levels)");
        counts(a, b) += 1.0;
        counts(b, a) += 1.0;
      }
    }
  }
  return {counts / counts.sum()};
}

CcmStats ccm_stats(const CooccurrenceMatrix& ccm) {
  const auto& p = ccm.cells;
  const int levels = ccm.levels();
  const Eigen::VectorXd idx = Eigen::VectorXd::LinSpaced(levels, 1.0, static_cast<double>(levels));
  const Eigen::VectorXd row_marginal = p.rowwise().sum();
  const Eigen::VectorXd col_marginal = p.colwise().sum().transpose();
  const double mu_x = idx.dot(row_marginal);
  const double mu_y = idx.dot(col_marginal);
  const Eigen::VectorXd dx = idx.array() - mu_x;
  const Eigen::VectorXd dy = idx.array() - mu_y;

  CcmStats s;
  s.mean = mu_x;
  s.autoc = idx.dot(p * idx);
  s.sosvh = dx.array().square().matrix().dot(row_marginal);
  s.second_moment = p.array().square().sum();
  s.covariance = dx.dot(p * dy);
  return s;
}

CcmExtras ccm_extras(const CooccurrenceMatrix& ccm) {
  CcmExtras e;
  const auto& p = ccm.cells;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      const double d = static_cast<double>(i - j);
      if (v > 0) e.entropy -= v * std::log(v);
      e.homogeneity += v / (1.0 + d * d);
      e.contrast += d * d * v;
      e.max_probability = std::max(e.max_probability, v);
    }
  }
  return e;
}

ChannelStats channel_stats(const Plane& plane) {
  if (plane.size() == 0) throw SizeError("channel statistics need a non-empty plane");
  ChannelStats s;
  s.mean = plane.mean();
  s.variance = (plane.array() - s.mean).square().mean();
  s.std = std::sqrt(s.variance);
  s.second_moment = plane.array().square().mean();
  return s;
}

double ndvi(const ScaledPlanes& planes, double epsilon) {
  return planes.nir.binaryExpr(planes.red, [epsilon](double nir, double red) {
                     return (nir - red) / guarded(nir + red, epsilon);
                   })
      .mean();
}

double evi(const ScaledPlanes& planes, const EviCoefficients& c, double epsilon) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < planes.nir.size(); ++k) {
    const double nir = planes.nir.data()[k];
    const double red = planes.red.data()[k];
    const double blue = planes.blue.data()[k];
    total += c.gain * (nir - red) / guarded(nir + c.c_red * red - c.c_blue * blue + c.soil, epsilon);
  }
  return total / static_cast<double>(planes.nir.size());
}

double arvi(const ScaledPlanes& planes, double epsilon) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < planes.nir.size(); ++k) {
    const double nir = planes.nir.data()[k];
    const double red = planes.red.data()[k];
    const double blue = planes.blue.data()[k];
    total += (nir - (2.0 * red - blue)) / guarded(nir + (2.0 * red + blue), epsilon);
  }
  return total / static_cast<double>(planes.nir.size());
}

double simple_ratio(const ScaledPlanes& planes, double epsilon) {
  return (planes.nir.array() / (planes.red.array() + epsilon)).mean();
}

namespace {

Eigen::MatrixXd dct_basis(Eigen::Index n) {
  Eigen::MatrixXd c(n, n);
  const double n_d = static_cast<double>(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / n_d) : std::sqrt(2.0 / n_d);
    for (Eigen::Index i = 0; i < n; ++i)
      c(k, i) = alpha * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) /
                                 (2.0 * n_d));
  }
  return c;
}

}  // namespace

Eigen::MatrixXd dct2(const Plane& plane) {
  return dct_basis(plane.rows()) * plane * dct_basis(plane.cols()).transpose();
}

double dct_feature(const Plane& intensity) {
  if (intensity.size() < 2) throw SizeError("DCT feature needs at least 2 samples");
  const Eigen::MatrixXd coeffs = dct2(intensity);
  return (coeffs.cwiseAbs().sum() - std::abs(coeffs(0, 0))) / static_cast<double>(coeffs.size() - 1);
}

namespace {

struct PatchAnalysis {
  ScaledPlanes planes;
  CooccurrenceMatrix h_ccm, s_ccm, i_ccm;
};

PatchAnalysis analyse(const Patch& patch, const FeatureConfig& config) {
  config.validate();
  PatchAnalysis a{rgb_to_hsi(patch), {}, {}, {}};
  a.h_ccm = cooccurrence(quantize(a.planes.hue, config.levels), config);
  a.s_ccm = cooccurrence(quantize(a.planes.saturation, config.levels), config);
  a.i_ccm = cooccurrence(quantize(a.planes.intensity, config.levels), config);
  return a;
}

FeatureVector features_from(const PatchAnalysis& a, const FeatureConfig& config) {
  const auto& planes = a.planes;
  const auto h = channel_stats(planes.hue);
  const auto s = channel_stats(planes.saturation);
  const auto i = channel_stats(planes.intensity);
  const auto nir = channel_stats(planes.nir);
  const auto h_ccm = ccm_stats(a.h_ccm);
  const auto s_ccm = ccm_stats(a.s_ccm);
  const auto i_ccm = ccm_stats(a.i_ccm);

  FeatureVector f;
  f[Feature::kICcmMean] = i_ccm.mean;
  f[Feature::kHCcmSosvh] = h_ccm.sosvh;
  f[Feature::kHCcmAutoc] = h_ccm.autoc;
  f[Feature::kSCcmMean] = s_ccm.mean;
  f[Feature::kHCcmMean] = h_ccm.mean;
  f[Feature::kSr] = simple_ratio(planes, config.epsilon);
  f[Feature::kSCcmSecondMoment] = s_ccm.second_moment;
  f[Feature::kICcmSecondMoment] = i_ccm.second_moment;
  f[Feature::kISecondMoment] = i.second_moment;
  f[Feature::kIVariance] = i.variance;
  f[Feature::kNirStd] = nir.std;
  f[Feature::kIStd] = i.std;
  f[Feature::kHStd] = h.std;
  f[Feature::kHMean] = h.mean;
  f[Feature::kIMean] = i.mean;
  f[Feature::kSMean] = s.mean;
  f[Feature::kICcmCovariance] = i_ccm.covariance;
  f[Feature::kNirMean] = nir.mean;
  f[Feature::kArvi] = arvi(planes, config.epsilon);
  f[Feature::kNdvi] = ndvi(planes, config.epsilon);
  f[Feature::kDct] = dct_feature(planes.intensity);
  f[Feature::kEvi] = evi(planes, config.evi, config.epsilon);
  return f;
}

}  // namespace

FeatureVector extract(const Patch& patch, const FeatureConfig& config) {
  return features_from(analyse(patch, config), config);
}

FeatureMatrix extract_batch(const Dataset& dataset, const FeatureConfig& config, unsigned workers) {
  if (dataset.empty()) throw SizeError("feature extraction needs a non-empty dataset");
  config.validate();
  return run_batch(dataset, kFeatureCount, workers, [&](std::size_t i, auto row) {
    const auto f = extract(dataset.patches[i], config);
    for (std::size_t c = 0; c < kFeatureCount; ++c) row(static_cast<Eigen::Index>(c)) = f.values[c];
  });
}

std::vector<std::string> extended_feature_names() {
  auto names = feature_names();
  for (const char* channel : {"h", "s", "i"})
    for (const char* stat : {"entropy", "homogeneity", "contrast", "max_probability"})
      names.push_back(std::string(channel) + "_ccm_" + stat);
  return names;
}

std::vector<double> extract_extended(const Patch& patch, const FeatureConfig& config) {
  const auto a = analyse(patch, config);
  const auto f = features_from(a, config);
  std::vector<double> out(f.values.begin(), f.values.end());
  for (const auto* ccm : {&a.h_ccm, &a.s_ccm, &a.i_ccm}) {
    const auto e = ccm_extras(*ccm);
    out.insert(out.end(), {e.entropy, e.homogeneity, e.contrast, e.max_probability});
  }
  return out;
}

FeatureMatrix extract_extended_batch(const Dataset& dataset, const FeatureConfig& config, unsigned workers) {
  if (dataset.empty()) throw SizeError("feature extraction needs a non-empty dataset");
  config.validate();
  const std::size_t cols = extended_feature_names().size();
  return run_batch(dataset, cols, workers, [&](std::size_t i, auto row) {
    const auto v = extract_extended(dataset.patches[i], config);
    for (std::size_t c = 0; c < cols; ++c) row(static_cast<Eigen::Index>(c)) = v[c];
  });
}

FeatureMatrix pixel_matrix(const Dataset& dataset) {
  if (dataset.empty()) throw SizeError("pixel matrix needs a non-empty dataset");
  const auto cols = static_cast<Eigen::Index>(dataset.patches.front().samples().size());
  FeatureMatrix out(static_cast<Eigen::Index>(dataset.size()), cols);
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    const auto s = dataset.patches[r].samples();
    if (static_cast<Eigen::Index>(s.size()) != cols) throw ShapeError("patches differ in size");
    for (Eigen::Index c = 0; c < cols; ++c) out(static_cast<Eigen::Index>(r), c) = s[static_cast<std::size_t>(c)] / 255.0;
  }
  return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& features, std::span<const int> labels,
                       std::span<const std::string> names) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) throw ShapeError("label count differs from rows");
  if (static_cast<std::size_t>(features.cols()) != names.size()) throw ShapeError("name count differs from columns");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "label";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    out << labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < features.cols(); ++c) out << ',' << format_double(features(r, c));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::pair<FeatureMatrix, std::vector<int>> read_feature_csv(const std::filesystem::path& path,
                                                            std::vector<std::string>* names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("feature CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header.front() != "label") throw FormatError("feature CSV must start with a label column");
  const std::size_t cols = header.size() - 1;
  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c == 0) {
        labels.push_back(std::stoi(cell));
      } else {
        double v = 0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc()) throw FormatError("bad number '" + cell + "' in feature CSV");
        values.push_back(v);
      }
      ++c;
    }
    if (c != cols + 1) throw FormatError("feature CSV row has " + std::to_string(c) + " columns");
  }
  FeatureMatrix m(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = values[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)];
  if (names) *names = {header.begin() + 1, header.end()};
  return {std::move(m), std::move(labels)};
}

}  // namespace satpipe
