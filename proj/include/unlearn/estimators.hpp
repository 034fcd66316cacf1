#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "unlearn/data.hpp"
#include "unlearn/loss.hpp"

namespace unlearn {

enum class Method { retrain, pretrain, ols, uls, uls_plus, graddiff, transfer_ridge, gd };

/// Stable identifiers used in CLI flags and output files:
/// retrain, pretrain, ols, uls, uls_plus, graddiff, tl, gd.
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view text);

struct EstimateResult {
  Vector theta;
  Method method = Method::uls;
  std::size_t iterations = 0;  // 0 for closed forms
  std::optional<double> lambda_used;
  std::optional<double> grad_residual;  // norm of the defining stationarity residual
};

struct GdConfig {
  std::optional<double> alpha;  // default: default_step_size()
  std::size_t t_max = 10000;
  double grad_tol = 1e-8;  // stop when residual <= grad_tol * (1 + |theta_p|)
  /// Called after every update with (t, theta_t).
  std::function<void(std::size_t, std::span<const double>)> on_iterate;

  void validate() const;
};

/// Forget-set moments. An empty forget set has n = 0 and zero moments.
struct ForgetMoments {
  std::size_t n = 0;
  Matrix sigma;  // X_f^T X_f / n
  Vector m;      // X_f^T y_f / n

  std::size_t p() const noexcept { return m.size(); }

  static ForgetMoments of(const Dataset& forget);
  static ForgetMoments of(const SufficientStats& forget);
  static ForgetMoments none(std::size_t p);
};

// ---------------------------------------------------------------------------
// Closed forms on normalized moments.
//
// With N = N_r + N_f from the model, sub moments (S, M) over n_sub rows and
// forget moments (F, g) over n_f rows, the ULS estimate
//
//   theta = theta_p - (n_sub / N_r) (X_sub^T X_sub)^{-1} X_f^T (y_f - X_f theta_p)
//
// becomes theta_p + (n_f / N_r) S^{-1} (F theta_p - g). It is the minimizer of
//
//   J(theta) = -(1/N) l(theta; D_f) + (theta_p - theta)^T Sp (theta_p - theta),
//   Sp = (N_r/N) S + (n_f/N) F,
//
// whose gradient 2[(N_r/N) S (theta - theta_p) + (n_f/N)(g - F theta_p)] is
// linear with Hessian 2 (N_r/N) S. The -2 from the unhalved squared loss
// cancels against the 2 from the quadratic anchor. ULS+, GradDiff and
// transfer ridge add or swap quadratic terms in the same moments.
// ---------------------------------------------------------------------------

EstimateResult ols_from_stats(const SufficientStats& stats, Method tag = Method::ols);
EstimateResult uls_from_stats(const PretrainedModel& model, const ForgetMoments& forget,
                              const SufficientStats& sub);
EstimateResult uls_plus_from_stats(const PretrainedModel& model, const ForgetMoments& forget,
                                   const SufficientStats& sub, double lambda);
EstimateResult graddiff_from_stats(const ForgetMoments& forget, const SufficientStats& sub,
                                   double lambda);
EstimateResult transfer_ridge_from_stats(const PretrainedModel& model, const SufficientStats& sub,
                                         double lambda);
/// Squared-loss gradient descent on moments; same iteration as gd_unlearn.
EstimateResult gd_unlearn_from_stats(const PretrainedModel& model, const ForgetMoments& forget,
                                     const SufficientStats& sub, const GdConfig& cfg);

// ---------------------------------------------------------------------------
// Dataset-level estimators.
// ---------------------------------------------------------------------------

EstimateResult ols_fit(const Dataset& d);

EstimateResult uls(const PretrainedModel& model, const Dataset& forget, const Dataset& sub);

/// lambda >= 0; lambda = 0 reproduces uls().
EstimateResult uls_plus(const PretrainedModel& model, const Dataset& forget, const Dataset& sub,
                        double lambda);

/// Minimizer of -(1/N_f) l(theta; D_f) + (lambda/n_sub) l(theta; D_sub). Throws
/// IndefiniteObjective when lambda S - F is not positive definite.
EstimateResult graddiff(const PretrainedModel& model, const Dataset& forget, const Dataset& sub,
                        double lambda);

/// Minimizer of (1/n_sub) l(theta; D_sub) + lambda |theta - theta_p|^2, lambda > 0.
EstimateResult transfer_ridge(const PretrainedModel& model, const Dataset& sub, double lambda);

/// Gradient descent on the stationarity condition
///   (N_r/n_sub)[grad l(theta; D_sub) - grad l(theta_p; D_sub)] - grad l(theta_p; D_f) = 0
/// started at theta_p. Works for any loss; squared loss runs on moments.
EstimateResult gd_unlearn(LossId loss, const PretrainedModel& model, const Dataset& forget,
                          const Dataset& sub, const GdConfig& cfg = {});

/// 0.9 / (N_r lambda_max(S)) for squared loss, 0.9 / (N_r lambda_max(S) / 4) for
/// logistic. lambda_max comes from 50 power-iteration steps.
double default_step_size(LossId loss, const SufficientStats& sub, std::size_t n_remaining);

struct LogisticFitOptions {
  double grad_tol = 1e-8;  // relative to n
  std::size_t t_max = 100000;
};

/// Logistic regression by gradient descent with Armijo backtracking. Throws
/// NotConverged when an iterate separates the data perfectly (no finite
/// minimizer exists) or the iteration cap is hit.
EstimateResult fit_logistic(const Dataset& d, const LogisticFitOptions& opts = {});

/// Empirical loss minimizer on `d` (OLS or logistic); tagged `tag`.
EstimateResult fit_loss_minimizer(LossId loss, const Dataset& d, Method tag);

/// Loss minimizer over the full data, with the caller's remaining/forget split.
PretrainedModel pretrain(LossId loss, const Dataset& full, std::size_t n_remaining,
                         std::size_t n_forget);

// Objectives and their gradients, evaluated directly on rows. These are the
// independent certificates for the closed forms above.
double uls_objective(std::span<const double> theta, const PretrainedModel& model,
                     const Dataset& forget, const Dataset& sub);
Vector uls_objective_grad(std::span<const double> theta, const PretrainedModel& model,
                          const Dataset& forget, const Dataset& sub);
double uls_plus_objective(std::span<const double> theta, const PretrainedModel& model,
                          const Dataset& forget, const Dataset& sub, double lambda);
Vector uls_plus_objective_grad(std::span<const double> theta, const PretrainedModel& model,
                               const Dataset& forget, const Dataset& sub, double lambda);
double graddiff_objective(std::span<const double> theta, const Dataset& forget,
                          const Dataset& sub, double lambda);
Vector graddiff_objective_grad(std::span<const double> theta, const Dataset& forget,
                               const Dataset& sub, double lambda);
double transfer_ridge_objective(std::span<const double> theta, const PretrainedModel& model,
                                const Dataset& sub, double lambda);
Vector transfer_ridge_objective_grad(std::span<const double> theta, const PretrainedModel& model,
                                     const Dataset& sub, double lambda);

}  // namespace unlearn
