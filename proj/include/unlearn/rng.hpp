#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "unlearn/numerics.hpp"

namespace unlearn {

/// Philox4x64 with 10 rounds (Salmon et al., SC'11). Pure function of
/// (counter, key); this is what makes streams reproducible regardless of
/// platform or thread schedule.
std::array<std::uint64_t, 4> philox4x64_10(std::array<std::uint64_t, 4> counter,
                                           std::array<std::uint64_t, 2> key) noexcept;

/// A single-owner random stream keyed by (seed, stream id). Parallel code
/// constructs one stream per task by id instead of sharing.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return key_[0]; }
  std::uint64_t stream_id() const noexcept { return key_[1]; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;

  /// Uniform integer in [0, n), unbiased. n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  /// Standard normal via Box-Muller; draws come in pairs.
  double normal() noexcept;

  void fill_normal(std::span<double> out) noexcept;

 private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buffer_{};
  unsigned used_ = 4;
  std::optional<double> spare_normal_;
};

/// n rows of mean + L z with z iid standard normal, L the factor's lower
/// triangle.
Matrix sample_gaussian(RngStream& rng, std::span<const double> mean, const SpdFactor& cov_factor,
                       std::size_t n);

/// n x p matrix of iid standard normals.
Matrix sample_standard_normal(RngStream& rng, std::size_t n, std::size_t p);

}  // namespace unlearn
