#pragma once

// Counter-based random number streams (Philox4x32-10).
//
// Every stream is addressed by (seed, stream id); draws are a pure function
// of (seed, stream, counter), so particle i always sees the same numbers no
// matter which thread runs it or in which order particles are processed.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace rpde {

namespace detail {

// One Philox4x32 round. Multipliers and Weyl constants from the
// Salmon et al. Random123 reference implementation.
inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
  constexpr std::uint64_t m0 = 0xD2511F53ull;
  constexpr std::uint64_t m1 = 0xCD9E8D57ull;
  const std::uint64_t p0 = m0 * ctr[0];
  const std::uint64_t p1 = m1 * ctr[2];
  const std::array<std::uint32_t, 4> out = {
      static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
      static_cast<std::uint32_t>(p1),
      static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
      static_cast<std::uint32_t>(p0)};
  ctr = out;
  key[0] += 0x9E3779B9u;
  key[1] += 0xBB67AE85u;
}

inline std::array<std::uint32_t, 4> philox10(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) philox_round(ctr, key);
  return ctr;
}

}  // namespace detail

// A splittable stream: 64-bit seed as the key, 64-bit stream id in the
// upper counter words, 64-bit draw counter in the lower words.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = detail::philox10(ctr, key);
    ++counter_;
    // second half of the block is discarded; one u64 per tick keeps the
    // draw <-> counter correspondence trivial to reason about
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  }

  // Uniform on (0,1], 53-bit resolution. Never returns 0 so log() is safe.
  double uniform01() {
    const std::uint64_t u = next_u64() >> 11;
    return (static_cast<double>(u) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Deterministic pairwise (binary-tree) sum: the result depends only on the
// order of the input slots, not on how the slots were filled.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  // strict binary tree: power-of-two inputs sum through exact doublings
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double std_error = 0.0;
  std::size_t count = 0;
};

inline MeanVar pairwise_mean_var(std::span<const double> v) {
  MeanVar out;
  out.count = v.size();
  if (v.empty()) return out;
  out.mean = pairwise_sum(v) / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - out.mean;
    sq[i] = d * d;
  }
  out.variance = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
  out.std_error = std::sqrt(out.variance / static_cast<double>(v.size()));
  return out;
}

}  // namespace rpde
