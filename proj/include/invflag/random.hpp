#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "invflag/matrix.hpp"

namespace invflag {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the key (low word, high word); the 128-bit counter is
/// (index low, index high, stream low, stream high). Independent streams for
/// parallel restarts come from `split(stream)`. Round constants are the
/// published Philox ones:
///   multipliers 0xD2511F53, 0xCD9E8D57; Weyl increments 0x9E3779B9, 0xBB67AE85.
/// Derived variates:
///   uniform  = ((a >> 5) * 2^26 + (b >> 6)) / 2^53 from two consecutive words
///   normal   = Box-Muller, sqrt(-2 ln(1 - u1)) * cos(2 pi u2), one value per call
class Philox {
 public:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  Philox split(std::uint64_t stream) const noexcept {
    return Philox((std::uint64_t{key_[1]} << 32) | key_[0], stream);
  }

  std::uint64_t stream() const noexcept { return stream_; }

  /// One Philox block for an explicit counter.
  std::array<std::uint32_t, 4> block(std::uint64_t index) const noexcept {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(index),
                                     static_cast<std::uint32_t>(index >> 32),
                                     static_cast<std::uint32_t>(stream_),
                                     static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

  std::uint32_t next_u32() noexcept {
    if (lane_ == 4) {
      buffer_ = block(index_++);
      lane_ = 0;
    }
    return buffer_[lane_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    const std::uint32_t a = next_u32() >> 5;
    const std::uint32_t b = next_u32() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) * (1.0 / 9007199254740992.0);
  }

  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
  Complex complex_normal() noexcept {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int lane_ = 4;
};

/// rows x cols matrix of i.i.d. standard complex Gaussians, row-major draw order.
inline CMatrix ginibre_sample(Philox& rng, std::size_t rows, std::size_t cols) {
  CMatrix m(rows, cols);
  for (auto& z : m.values()) z = rng.complex_normal();
  return m;
}

inline CMatrix ginibre_sample(Philox& rng, std::size_t n) { return ginibre_sample(rng, n, n); }

}  // namespace invflag
