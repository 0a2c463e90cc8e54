#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace satpipe {

inline constexpr int kPatchSide = 28;
inline constexpr int kBandCount = 4;

enum class Band : int { kRed = 0, kGreen = 1, kBlue = 2, kNir = 3 };

/// A width x height image block with four 8-bit planes (R, G, B, NIR),
/// stored plane-sequential, row-major.
class Patch {
 public:
  Patch() : Patch(kPatchSide, kPatchSide) {}
  Patch(int width, int height);
  Patch(int width, int height, std::vector<std::uint8_t> samples);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t at(Band band, int y, int x) const {
    return samples_[static_cast<std::size_t>(band) * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& at(Band band, int y, int x) {
    return samples_[static_cast<std::size_t>(band) * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const std::uint8_t> plane(Band band) const {
    return {samples_.data() + static_cast<std::size_t>(band) * plane_size(), plane_size()};
  }
  std::span<const std::uint8_t> samples() const noexcept { return samples_; }
  std::span<std::uint8_t> samples() noexcept { return samples_; }

  bool operator==(const Patch&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> samples_;
};

/// Label scheme. SAT-4 and SAT-6 are identified by their class count.
class ClassScheme {
 public:
  static ClassScheme sat4() { return ClassScheme(4); }
  static ClassScheme sat6() { return ClassScheme(6); }
  static ClassScheme custom(int class_count);

  int class_count() const noexcept { return class_count_; }
  bool is_sat4() const noexcept { return class_count_ == 4; }
  bool is_sat6() const noexcept { return class_count_ == 6; }
  /// "SAT4", "SAT6" or "CUSTOM(k)".
  std::string name() const;
  /// Human-readable class names; generic "class_i" for custom schemes.
  std::vector<std::string> label_names() const;

  bool operator==(const ClassScheme&) const = default;

 private:
  explicit ClassScheme(int k) : class_count_(k) {}
  int class_count_;
};

struct Dataset {
  ClassScheme scheme = ClassScheme::sat4();
  std::vector<Patch> patches;
  std::vector<int> labels;

  std::size_t size() const noexcept { return patches.size(); }
  bool empty() const noexcept { return patches.empty(); }
  /// Throws LabelError / ShapeError when the parallel-list invariants fail.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

enum class DatasetFormat { kSatbin, kCsv };

struct LoadOptions {
  /// Overrides the class count for CSV input (which does not store one).
  std::optional<int> class_count;
};

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, const LoadOptions& options = {});
void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  DatasetFormat format = DatasetFormat::kSatbin);

/// In-memory SATBIN codec; `load_dataset`/`save_dataset` wrap these.
std::vector<std::uint8_t> encode_satbin(const Dataset& dataset);
Dataset decode_satbin(std::span<const std::uint8_t> bytes);

struct SyntheticClass {
  std::array<double, kBandCount> band_means{};  ///< R, G, B, NIR in [0, 255]
  double noise_std = 0.0;
  int texture_period = 1;
};

struct SyntheticSpec {
  std::vector<SyntheticClass> classes;
  int patches_per_class = 1;
  int width = kPatchSide;
  int height = kPatchSide;
  double texture_amplitude = 30.0;

  void validate() const;
};

/// Per class: clamp(round(mean + texture + noise), 0, 255). The texture is a
/// separable sinusoid of the class period with a random integer phase per
/// patch. Classes are emitted in blocks (all of class 0, then class 1, ...).
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Texture-only classes for demos and the directional experiments: every
/// class has the same band means; pairs of classes share a modulation
/// period and differ in noise level (grain).
SyntheticSpec default_synthetic_spec(int class_count, int patches_per_class);

/// Shuffles and partitions; train receives floor(train_fraction * n) patches.
std::pair<Dataset, Dataset> shuffle_split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Index-level split used by `shuffle_split`; exposed for the large-n check.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shuffle_split_indices(std::size_t n, double train_fraction,
                                                                                      std::uint64_t seed);

}  // namespace satpipe
