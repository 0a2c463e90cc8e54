#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace satpipe {

/// SplitMix64 step. Used to derive independent stream seeds from one
/// user seed so that every consumer (shuffle, init, CD sampling, ...)
/// draws from its own generator.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for stream `stream` derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

/// Recorded in run manifests.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64 streams seeded by splitmix64(seed, stream)";

// Stream ids. Kept stable so artifacts stay reproducible across versions.
namespace streams {
inline constexpr std::uint64_t kSynthetic = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kRbmInit = 3;
inline constexpr std::uint64_t kRbmSample = 4;
inline constexpr std::uint64_t kRbmBatch = 5;
inline constexpr std::uint64_t kHeadInit = 6;
inline constexpr std::uint64_t kFinetune = 7;
inline constexpr std::uint64_t kValidation = 8;
inline constexpr std::uint64_t kAutoencoder = 9;
inline constexpr std::uint64_t kIntrinsicDim = 10;
inline constexpr std::uint64_t kAutoencoderProbe = 11;
}  // namespace streams

}  // namespace satpipe
