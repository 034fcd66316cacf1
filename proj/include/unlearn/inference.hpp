#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "unlearn/data.hpp"

namespace unlearn {

enum class CiMethod { uls, ols };
std::string_view to_string(CiMethod m) noexcept;

/// Per-subsample-row terms: with w = S^{-1} v and d = theta_uls - theta_p,
///   a_i = (w^T x_i)(y_i - x_i^T theta_uls)
///   b_i = (w^T x_i)(x_i^T d) - v^T d
/// so sum_i b_i = 0 by construction of S.
struct NoiseTerms {
  Vector a;
  Vector b;
};

NoiseTerms noise_terms(std::span<const double> v, const Dataset& sub,
                       std::span<const double> theta_uls, std::span<const double> theta_p);
/// Same terms with a precomputed factor of sub's normalized Gram matrix.
NoiseTerms noise_terms(std::span<const double> v, const Dataset& sub, const SpdFactor& gram,
                       std::span<const double> theta_uls, std::span<const double> theta_p);

/// (1/N_r^2) sum (a + ((n - N_r)/n) b)^2 + ((N_r - n)/(N_r^2 n)) sum (a + b)^2.
double variance_uls(const NoiseTerms& terms, std::size_t n_remaining, std::size_t n_sub);

struct InferenceReport {
  Vector v;
  double point = 0.0;
  double variance = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  CiMethod method = CiMethod::uls;

  double sd() const;
};

/// Upper alpha/2 standard normal quantile.
double z_multiplier(double alpha);

/// Interval for v^T theta_r around the ULS estimate.
InferenceReport ci_uls(const PretrainedModel& model, const Dataset& forget, const Dataset& sub,
                       std::span<const double> v, double alpha);

/// Builds the ULS report from pieces the caller already has (the simulation
/// reuses the Gram factor and estimate it computed for the point estimate).
InferenceReport ci_uls_from_parts(std::span<const double> v, const Dataset& sub,
                                  const SpdFactor& gram, std::span<const double> theta_uls,
                                  std::span<const double> theta_p, std::size_t n_remaining,
                                  double alpha);

/// Classical interval from the subsample alone: v^T theta_ols +- z s sqrt(v^T (X^T X)^{-1} v),
/// s^2 = RSS / (n - p). Throws InsufficientData when n <= p.
InferenceReport ci_ols(const Dataset& sub, std::span<const double> v, double alpha);
InferenceReport ci_ols_from_parts(std::span<const double> v, const Dataset& sub,
                                  const SpdFactor& gram, std::span<const double> theta_ols,
                                  double alpha);

/// e_k with k 1-based.
Vector coordinate_direction(std::size_t p, std::size_t k);

}  // namespace unlearn
