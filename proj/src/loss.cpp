#include "unlearn/loss.hpp"

#include <cmath>

#include "unlearn/error.hpp"
#include "unlearn/simd.hpp"

namespace unlearn {

namespace {

void require_width(std::span<const double> theta, const Dataset& d) {
  if (theta.size() != d.p()) {
    throw Error(ErrorKind::DimensionMismatch, "theta has length " + std::to_string(theta.size()) +
                                                  ", data has p = " + std::to_string(d.p()));
  }
}

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double loss_value(LossId loss, std::span<const double> theta, const Dataset& d) {
  require_width(theta, d);
  if (d.empty()) return 0.0;
  const Vector eta = multiply(d.x(), theta);
  double total = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double y = d.y()[i];
    if (loss == LossId::squared) {
      const double r = y - eta[i];
      total += r * r;
    } else {
      total += softplus(eta[i]) - y * eta[i];
    }
  }
  return total;
}

Vector loss_grad(LossId loss, std::span<const double> theta, const Dataset& d) {
  require_width(theta, d);
  Vector g(d.p(), 0.0);
  if (d.empty()) return g;
  const Vector eta = multiply(d.x(), theta);
  const auto& k = simd::active();
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double y = d.y()[i];
    const double w = loss == LossId::squared ? -2.0 * (y - eta[i]) : sigmoid(eta[i]) - y;
    k.axpy(w, d.x().row(i).data(), g.data(), d.p());
  }
  return g;
}

Vector squared_loss_grad(const SufficientStats& stats, std::span<const double> theta) {
  if (theta.size() != stats.p()) {
    throw Error(ErrorKind::DimensionMismatch, "theta length differs from stats dimension");
  }
  Vector g = multiply(stats.sigma, theta);
  const double scale = 2.0 * static_cast<double>(stats.n);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = scale * (g[j] - stats.m[j]);
  return g;
}

void check_responses(LossId loss, const Dataset& d) {
  if (loss != LossId::logistic) return;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double y = d.y()[i];
    if (y != 0.0 && y != 1.0) {
      throw Error(ErrorKind::InvalidArgument, "logistic loss needs responses in {0, 1}; row " +
                                                  std::to_string(i + 1) + " has " +
                                                  format_double(y));
    }
  }
}

}  // namespace unlearn
