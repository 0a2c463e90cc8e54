#include "satpipe/normalize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "satpipe/errors.hpp"

namespace satpipe {

NormalizationStats fit_normalization(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() == 0 || matrix.cols() == 0) throw SizeError("cannot fit normalization on an empty matrix");
  return {matrix.colwise().minCoeff().transpose(), matrix.colwise().maxCoeff().transpose()};
}

Eigen::MatrixXd apply_normalization(const NormalizationStats& stats, const Eigen::MatrixXd& matrix) {
  if (matrix.cols() != stats.dims())
    throw ShapeError("matrix has " + std::to_string(matrix.cols()) + " columns, stats have " +
                     std::to_string(stats.dims()));
  Eigen::MatrixXd out(matrix.rows(), matrix.cols());
  for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
    const double range = stats.max(c) - stats.min(c);
    if (range > 0) {
      out.col(c) = (matrix.col(c).array() - stats.min(c)) / range;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

void normalize_pair(Eigen::MatrixXd& train, Eigen::MatrixXd& test, NormalizationMode mode) {
  const auto train_stats = fit_normalization(train);
  const auto test_stats = mode == NormalizationMode::kSeparate ? fit_normalization(test) : train_stats;
  train = apply_normalization(train_stats, train);
  test = apply_normalization(test_stats, test);
}

void write_normalization_csv(const std::filesystem::path& path, const NormalizationStats& stats,
                             std::span<const std::string> names) {
  if (static_cast<Eigen::Index>(names.size()) != stats.dims()) throw ShapeError("name count differs from stats");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  auto fmt = [](double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
  };
  out << "feature,min,max\n";
  for (Eigen::Index i = 0; i < stats.dims(); ++i)
    out << names[static_cast<std::size_t>(i)] << ',' << fmt(stats.min(i)) << ',' << fmt(stats.max(i)) << '\n';
}

NormalizationStats read_normalization_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "feature,min,max") throw FormatError("normalization CSV header must be 'feature,min,max'");
  std::vector<double> mins, maxs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, lo, hi;
    std::getline(ss, name, ',');
    std::getline(ss, lo, ',');
    std::getline(ss, hi, ',');
    double a = 0, b = 0;
    if (std::from_chars(lo.data(), lo.data() + lo.size(), a).ec != std::errc() ||
        std::from_chars(hi.data(), hi.data() + hi.size(), b).ec != std::errc())
      throw FormatError("bad normalization row '" + line + "'");
    mins.push_back(a);
    maxs.push_back(b);
  }
  NormalizationStats s;
  s.min = Eigen::Map<Eigen::VectorXd>(mins.data(), static_cast<Eigen::Index>(mins.size()));
  s.max = Eigen::Map<Eigen::VectorXd>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
  return s;
}

}  // namespace satpipe
