#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace certsmooth {

/// Philox 4x32 block cipher, 10 rounds. Counter-based: every 128-bit output
/// block is a pure function of (counter, key), so any draw can be generated
/// independently of the others and in any order.
namespace philox {

constexpr std::uint32_t kW32A = 0x9E3779B9;
constexpr std::uint32_t kW32B = 0xBB67AE85;
constexpr std::uint32_t kM4x32A = 0xD2511F53;
constexpr std::uint32_t kM4x32B = 0xCD9E8D57;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t prod = static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b);
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
  for (int round = 0;; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kM4x32A, ctr[0], hi0, lo0);
    mul_hi_lo(kM4x32B, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    if (round == 9) return ctr;
    key[0] += kW32A;
    key[1] += kW32B;
  }
}

}  // namespace philox

/// splitmix64 finalizer; used to spread seeds before combining.
inline std::uint64_t split_mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministically derives an independent child seed from (seed, a, b).
/// All sampling stages key their generators through this, which keeps every
/// stage's stream disjoint and makes whole runs replayable from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return split_mix64(split_mix64(split_mix64(seed) ^ a) ^ b);
}

/// Tags for derive_seed so distinct sampling stages never share a stream.
namespace seeds {
constexpr std::uint64_t kCertifySelect = 0xA1;
constexpr std::uint64_t kCertifyEstimate = 0xA2;
constexpr std::uint64_t kGradientStep = 0xA3;
constexpr std::uint64_t kGradientSide = 0xA4;
constexpr std::uint64_t kRejection = 0xA5;
constexpr std::uint64_t kGridPoint = 0xA6;
constexpr std::uint64_t kCurvePoint = 0xA7;
constexpr std::uint64_t kSqcPoint = 0xA8;
constexpr std::uint64_t kOracle = 0xA9;
constexpr std::uint64_t kDatasetPoint = 0xAA;
constexpr std::uint64_t kFinalCertify = 0xAB;
}  // namespace seeds

/// Standard normal sampler over a (draw, dimension) grid. Value (i, j) is a
/// pure function of the seed, so streams are reproducible regardless of
/// evaluation order or thread count. Each Philox block yields one
/// Box-Muller pair covering dimensions 2b and 2b + 1.
class GaussianNoise {
 public:
  explicit GaussianNoise(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::pair<double, double> pair_at(std::uint64_t draw, std::uint32_t block_index) const {
    std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(draw),
                                        static_cast<std::uint32_t>(draw >> 32), block_index, 0};
    auto out = philox::block(ctr, key_);
    std::uint64_t bits1 = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    std::uint64_t bits2 = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    double u1 = (static_cast<double>(bits1) + 1.0) * 0x1p-64;  // (0, 1]
    double u2 = static_cast<double>(bits2) * 0x1p-64;          // [0, 1)
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  double at(std::uint64_t draw, std::uint32_t dim) const {
    auto [z0, z1] = pair_at(draw, dim / 2);
    return (dim % 2 == 0) ? z0 : z1;
  }

  void fill(std::uint64_t draw, std::span<double> out) const {
    std::uint32_t b = 0;
    std::size_t i = 0;
    while (i < out.size()) {
      auto [z0, z1] = pair_at(draw, b++);
      out[i++] = z0;
      if (i < out.size()) out[i++] = z1;
    }
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

}  // namespace certsmooth
