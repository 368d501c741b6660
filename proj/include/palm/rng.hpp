#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "palm/types.hpp"

namespace palm {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
/// Pure function of (counter, key); no hidden state.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Seed wrapper; identical seeds give bit-identical instances.
struct Seeded {
  std::uint64_t seed = 0;
};

/// Sequential stream over the Philox counter space. The 64-bit seed is the
/// key; `stream` selects an independent counter lane. Normals use the
/// Box-Muller transform so draws are reproducible across standard libraries.
class Rng {
 public:
  static constexpr std::string_view kVersion = "philox4x32-10/box-muller/v1";

  explicit Rng(Seeded s, std::uint32_t stream = 0)
      : key_{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32)},
        stream_{stream} {}

  std::uint64_t next_u64() {
    if (lane_ == 2) refill();
    return buffer_[lane_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, k).
  Index index(Index k) {
    require(k > 0, "index range must be positive");
    return static_cast<Index>(uniform() * static_cast<double>(k));
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double variance) { return mean + std::sqrt(variance) * normal(); }

  Vec normal_vector(Index n, double variance = 1.0) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(0.0, variance);
    return v;
  }

  /// Column-major fill, matching Eigen storage order.
  Mat normal_matrix(Index rows, Index cols, double variance = 1.0) {
    Mat a(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) a(i, j) = normal(0.0, variance);
    return a;
  }

  Mat uniform_matrix(Index rows, Index cols) {
    Mat a(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) a(i, j) = uniform();
    return a;
  }

 private:
  void refill() {
    const auto out = philox4x32_10({static_cast<std::uint32_t>(block_),
                                    static_cast<std::uint32_t>(block_ >> 32), stream_, 0u},
                                   key_);
    ++block_;
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    lane_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int lane_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace palm
