#pragma once

// Random instance generators for the property tests.

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "unlearn/data.hpp"
#include "unlearn/estimators.hpp"
#include "unlearn/rng.hpp"

namespace gen {

using namespace unlearn;

inline Matrix normal_matrix(RngStream& rng, std::size_t n, std::size_t p, double scale = 1.0) {
  Matrix m(n, p);
  for (double& x : m.entries()) x = scale * rng.normal();
  return m;
}

inline Vector normal_vector(RngStream& rng, std::size_t p, double scale = 1.0) {
  Vector v(p);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

/// B^T B + I for a random square B.
inline Matrix spd(RngStream& rng, std::size_t p) {
  const Matrix b = normal_matrix(rng, p, p);
  Matrix a = multiply(transpose(b), b);
  for (std::size_t i = 0; i < p; ++i) a(i, i) += 1.0;
  return a;
}

inline Dataset linear_data(RngStream& rng, std::size_t n, std::size_t p, const Vector& theta,
                           Role role, double noise = 1.0) {
  Matrix x = normal_matrix(rng, n, p);
  Vector y = n > 0 ? multiply(x, theta) : Vector{};
  for (double& v : y) v += noise * rng.normal();
  return Dataset(std::move(x), std::move(y), role);
}

struct Instance {
  PretrainedModel model;
  Dataset remaining;
  Dataset forget;
  Dataset sub;
  Vector theta_r;
};

/// Remaining rows from theta_r, forget rows from theta_r + shift, squared-loss
/// pretrain on both, and a uniform subsample of the remaining rows.
inline Instance instance(std::uint64_t seed, std::size_t p, std::size_t n_r, std::size_t n_f,
                         std::size_t n_sub, double shift = 1.0) {
  RngStream rng(seed, 99);
  Vector theta_r = normal_vector(rng, p);
  Vector theta_f = theta_r;
  for (double& t : theta_f) t += shift / std::sqrt(static_cast<double>(p));
  Dataset remaining = linear_data(rng, n_r, p, theta_r, Role::remaining);
  Dataset forget = linear_data(rng, n_f, p, theta_f, Role::forget);
  PretrainedModel model = pretrain(LossId::squared, concat(remaining, forget, Role::remaining), n_r, n_f);
  Dataset sub = subsample(remaining, n_sub, rng);
  return Instance{std::move(model), std::move(remaining), std::move(forget), std::move(sub),
                  std::move(theta_r)};
}

inline Dataset logistic_data(RngStream& rng, std::size_t n, std::size_t p, const Vector& theta,
                             Role role) {
  Matrix x = normal_matrix(rng, n, p);
  Vector y(n);
  const Vector eta = n > 0 ? multiply(x, theta) : Vector{};
  for (std::size_t i = 0; i < n; ++i) y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
  return Dataset(std::move(x), std::move(y), role);
}

}  // namespace gen
