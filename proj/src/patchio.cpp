#include "satpipe/patchio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "satpipe/errors.hpp"
#include "satpipe/random.hpp"

namespace satpipe {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'A', 'T', 'P'};
constexpr std::uint8_t kSatbinVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 1 + 2 + 2 + 1 + 1 + 4;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int side_from_pixel_count(std::size_t pixels) {
  if (pixels % kBandCount != 0) return -1;
  const auto plane = pixels / kBandCount;
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(plane))));
  return side * side == plane ? static_cast<int>(side) : -1;
}

Dataset load_csv(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::size_t columns = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      const std::string expected = columns == 0 ? "label" : "px_" + std::to_string(columns - 1);
      if (cell != expected) throw FormatError("CSV header column " + std::to_string(columns) + " is '" + cell +
                                              "', expected '" + expected + "'");
      ++columns;
    }
  }
  const int side = columns > 1 ? side_from_pixel_count(columns - 1) : -1;
  if (side <= 0) throw FormatError("CSV pixel column count is not 4 * side^2");

  Dataset ds;
  int max_label = -1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::vector<std::uint8_t> samples;
    samples.reserve(columns - 1);
    int label = -1;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < columns; ++c) {
      int value = 0;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc() || value < 0 || (c > 0 && value > 255))
        throw FormatError("CSV row " + std::to_string(row) + " column " + std::to_string(c) + " is not a valid value");
      if (c == 0) {
        label = value;
      } else {
        samples.push_back(static_cast<std::uint8_t>(value));
      }
      p = next;
      if (c + 1 < columns) {
        if (p == end || *p != ',') throw FormatError("CSV row " + std::to_string(row) + " has too few columns");
        ++p;
      }
    }
    if (p != end) throw FormatError("CSV row " + std::to_string(row) + " has too many columns");
    max_label = std::max(max_label, label);
    ds.patches.emplace_back(side, side, std::move(samples));
    ds.labels.push_back(label);
  }

  const int k = options.class_count.value_or(std::max(max_label + 1, 2));
  if (max_label >= k) throw LabelError("label " + std::to_string(max_label) + " outside scheme of " +
                                       std::to_string(k) + " classes");
  ds.scheme = ClassScheme::custom(k);
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t pixels = ds.empty() ? kBandCount * kPatchSide * kPatchSide : ds.patches.front().samples().size();
  out << "label";
  for (std::size_t i = 0; i < pixels; ++i) out << ",px_" << i;
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.labels[r];
    for (auto s : ds.patches[r].samples()) out << ',' << static_cast<int>(s);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

Patch::Patch(int width, int height)
    : Patch(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(kBandCount) * width * height, 0)) {}

Patch::Patch(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  if (width <= 0 || height <= 0) throw ShapeError("patch dimensions must be positive");
  if (samples_.size() != static_cast<std::size_t>(kBandCount) * width * height)
    throw ShapeError("patch sample count does not match 4 x width x height");
}

ClassScheme ClassScheme::custom(int class_count) {
  if (class_count < 2 || class_count > 255) throw LabelError("class count must be in [2, 255]");
  return ClassScheme(class_count);
}

std::string ClassScheme::name() const {
  if (is_sat4()) return "SAT4";
  if (is_sat6()) return "SAT6";
  return "CUSTOM(" + std::to_string(class_count_) + ")";
}

std::vector<std::string> ClassScheme::label_names() const {
  if (is_sat4()) return {"barren_land", "trees", "grassland", "other"};
  if (is_sat6()) return {"barren_land", "trees", "grassland", "roads", "buildings", "water_bodies"};
  std::vector<std::string> names;
  for (int i = 0; i < class_count_; ++i) names.push_back("class_" + std::to_string(i));
  return names;
}

void Dataset::validate() const {
  if (patches.size() != labels.size()) throw ShapeError("patch and label lists differ in length");
  for (int label : labels)
    if (label < 0 || label >= scheme.class_count())
      throw LabelError("label " + std::to_string(label) + " outside scheme " + scheme.name());
  for (const auto& p : patches)
    if (p.width() != patches.front().width() || p.height() != patches.front().height())
      throw ShapeError("patches in a dataset must share dimensions");
}

std::vector<std::uint8_t> encode_satbin(const Dataset& ds) {
  ds.validate();
  const int width = ds.empty() ? kPatchSide : ds.patches.front().width();
  const int height = ds.empty() ? kPatchSide : ds.patches.front().height();
  if (width > 0xffff || height > 0xffff) throw ShapeError("patch dimensions exceed u16");
  if (ds.size() > 0xffffffffULL) throw SizeError("record count exceeds u32");

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + ds.size() * (1 + static_cast<std::size_t>(kBandCount) * width * height));
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(kSatbinVersion);
  put_u16(out, static_cast<std::uint16_t>(width));
  put_u16(out, static_cast<std::uint16_t>(height));
  out.push_back(kBandCount);
  out.push_back(static_cast<std::uint8_t>(ds.scheme.class_count()));
  put_u32(out, static_cast<std::uint32_t>(ds.size()));
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out.push_back(static_cast<std::uint8_t>(ds.labels[r]));
    const auto s = ds.patches[r].samples();
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

Dataset decode_satbin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw TruncationError("SATBIN header truncated", bytes.size());
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad SATBIN magic");
  if (bytes[4] != kSatbinVersion) throw FormatError("unsupported SATBIN version " + std::to_string(bytes[4]));
  const int width = get_u16(bytes, 5);
  const int height = get_u16(bytes, 7);
  const int bands = bytes[9];
  const int classes = bytes[10];
  const std::uint32_t count = get_u32(bytes, 11);
  if (width == 0 || height == 0) throw FormatError("SATBIN patch dimensions must be positive");
  if (bands != kBandCount) throw FormatError("SATBIN band count " + std::to_string(bands) + " is not 4");
  if (classes < 2) throw FormatError("SATBIN class count must be at least 2");

  Dataset ds;
  ds.scheme = ClassScheme::custom(classes);
  ds.patches.reserve(count);
  ds.labels.reserve(count);
  const std::size_t payload = static_cast<std::size_t>(bands) * width * height;
  std::size_t at = kHeaderSize;
  for (std::uint32_t r = 0; r < count; ++r) {
    if (at + 1 + payload > bytes.size())
      throw TruncationError("SATBIN record " + std::to_string(r) + " truncated", bytes.size());
    const int label = bytes[at];
    if (label >= classes)
      throw LabelError("record " + std::to_string(r) + " label " + std::to_string(label) + " outside " +
                       std::to_string(classes) + " classes");
    ds.labels.push_back(label);
    ds.patches.emplace_back(width, height,
                            std::vector<std::uint8_t>(bytes.begin() + at + 1, bytes.begin() + at + 1 + payload));
    at += 1 + payload;
  }
  if (at != bytes.size()) throw FormatError("trailing bytes after " + std::to_string(count) + " SATBIN records");
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, const LoadOptions& options) {
  if (format == DatasetFormat::kCsv) return load_csv(path, options);
  const auto bytes = read_file(path);
  Dataset ds = decode_satbin(bytes);
  if (options.class_count && *options.class_count != ds.scheme.class_count())
    throw LabelError("SATBIN class count differs from requested scheme");
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DatasetFormat format) {
  if (format == DatasetFormat::kCsv) {
    dataset.validate();
    save_csv(dataset, path);
    return;
  }
  const auto bytes = encode_satbin(dataset);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void SyntheticSpec::validate() const {
  if (classes.size() < 2) throw ConfigError("synthetic spec needs at least 2 classes");
  if (patches_per_class < 1) throw ConfigError("patches_per_class must be >= 1");
  if (width < 1 || height < 1) throw ConfigError("patch dimensions must be positive");
  if (texture_amplitude < 0) throw ConfigError("texture amplitude must be >= 0");
  for (const auto& c : classes) {
    for (double m : c.band_means)
      if (!(m >= 0.0 && m <= 255.0)) throw ConfigError("band means must lie in [0, 255]");
    if (!(c.noise_std >= 0.0)) throw ConfigError("noise std must be >= 0");
    if (c.texture_period < 1) throw ConfigError("texture period must be >= 1");
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, streams::kSynthetic);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.scheme = ClassScheme::custom(static_cast<int>(spec.classes.size()));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto& cls = spec.classes[c];
    const int period = cls.texture_period;
    std::uniform_int_distribution<int> phase(0, period - 1);
    for (int n = 0; n < spec.patches_per_class; ++n) {
      const int ox = phase(rng);
      const int oy = phase(rng);
      Patch patch(spec.width, spec.height);
      for (int b = 0; b < kBandCount; ++b) {
        for (int y = 0; y < spec.height; ++y) {
          const double ty = std::sin(two_pi * (y + oy + 0.5) / period);
          for (int x = 0; x < spec.width; ++x) {
            const double tx = std::sin(two_pi * (x + ox + 0.5) / period);
            double v = cls.band_means[b] + spec.texture_amplitude * tx * ty;
            if (cls.noise_std > 0) v += cls.noise_std * gauss(rng);
            patch.at(static_cast<Band>(b), y, x) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
          }
        }
      }
      ds.patches.push_back(std::move(patch));
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

SyntheticSpec default_synthetic_spec(int class_count, int patches_per_class) {
  if (class_count < 2) throw ConfigError("class_count must be >= 2");
  SyntheticSpec spec;
  spec.patches_per_class = patches_per_class;
  // Classes come in pairs sharing a period: one fine-grained (low noise),
  // one coarse (high noise). Means are shared by every class.
  constexpr std::array<int, 6> periods = {2, 6, 4, 9, 3, 12};
  for (int c = 0; c < class_count; ++c) {
    SyntheticClass cls;
    cls.band_means = {110.0, 115.0, 100.0, 125.0};
    cls.noise_std = c % 2 == 0 ? 15.0 : 45.0;
    const int pair = c / 2;
    cls.texture_period = periods[static_cast<std::size_t>(pair) % periods.size()] +
                         static_cast<int>(pair / static_cast<int>(periods.size()));
    spec.classes.push_back(cls);
  }
  return spec;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shuffle_split_indices(std::size_t n,
                                                                                      double train_fraction,
                                                                                      std::uint64_t seed) {
  if (n < 2) throw SizeError("shuffle_split needs at least 2 patches");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, streams::kSplit);
  // Explicit Fisher-Yates: std::shuffle's algorithm is implementation-defined.
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  const auto train_size = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> shuffle_split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  dataset.validate();
  auto [train_idx, test_idx] = shuffle_split_indices(dataset.size(), train_fraction, seed);
  auto gather = [&](const std::vector<std::size_t>& idx) {
    Dataset out;
    out.scheme = dataset.scheme;
    out.patches.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (auto i : idx) {
      out.patches.push_back(dataset.patches[i]);
      out.labels.push_back(dataset.labels[i]);
    }
    return out;
  };
  return {gather(train_idx), gather(test_idx)};
}

}  // namespace satpipe
