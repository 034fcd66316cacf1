#include "unlearn/rng.hpp"

#include <cmath>
#include <numbers>

#include "unlearn/error.hpp"

namespace unlearn {

namespace {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const u128 prod = static_cast<u128>(a) * b;
  hi = static_cast<std::uint64_t>(prod >> 64);
  lo = static_cast<std::uint64_t>(prod);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64_10(std::array<std::uint64_t, 4> ctr,
                                           std::array<std::uint64_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : key_{seed, stream_id} {}

std::uint64_t RngStream::next_u64() noexcept {
  if (used_ == 4) {
    buffer_ = philox4x64_10({block_, 0, 0, 0}, key_);
    ++block_;
    used_ = 0;
  }
  return buffer_[used_++];
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) noexcept {
  // Lemire's multiply-and-reject.
  std::uint64_t x = next_u64();
  u128 m = static_cast<u128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<u128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() noexcept {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(angle);
  return r * std::cos(angle);
}

void RngStream::fill_normal(std::span<double> out) noexcept {
  for (double& v : out) v = normal();
}

Matrix sample_standard_normal(RngStream& rng, std::size_t n, std::size_t p) {
  Matrix out(n, p);
  rng.fill_normal(out.entries());
  return out;
}

Matrix sample_gaussian(RngStream& rng, std::span<const double> mean, const SpdFactor& cov_factor,
                       std::size_t n) {
  const std::size_t p = cov_factor.dim();
  if (mean.size() != p) {
    throw Error(ErrorKind::DimensionMismatch, "sample_gaussian mean length differs from factor");
  }
  Matrix out(n, p);
  Vector z(p);
  for (std::size_t i = 0; i < n; ++i) {
    rng.fill_normal(z);
    const Vector lz = cov_factor.apply_lower(z);
    auto row = out.row(i);
    for (std::size_t j = 0; j < p; ++j) row[j] = mean[j] + lz[j];
  }
  return out;
}

}  // namespace unlearn
