#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace kfp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

/// Standard normal variates from one Philox stream: key = seed, counter =
/// (block, stream). Each block gives two uniforms with 53 random bits;
/// accepted pairs give two normals.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  double next() {
    if (available_ > 0) {
      available_ = 0;
      return cached_;
    }
    // Marsaglia polar method on pairs of uniforms.
    for (;;) {
      refill();
      uniform_available_ = 0;
      const double a = 2.0 * uniforms_[0] - 1.0;
      const double b = 2.0 * uniforms_[1] - 1.0;
      const double s = a * a + b * b;
      if (s >= 1.0 || s == 0.0) continue;
      const double m = std::sqrt(-2.0 * std::log(s) / s);
      cached_ = b * m;
      available_ = 1;
      return a * m;
    }
  }
  /// Uniform in (0, 1).
  double uniform();

 private:
  void refill() {
    const Philox4x32::Counter out = Philox4x32::apply(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
         static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        key_);
    ++block_;
    uniforms_ = {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
    uniform_available_ = 2;
  }
  static double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  double cached_ = 0.0;
  int available_ = 0;
  std::array<double, 2> uniforms_{};
  int uniform_available_ = 0;
};

}  // namespace kfp
