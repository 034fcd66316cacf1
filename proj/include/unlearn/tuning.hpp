#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "unlearn/data.hpp"
#include "unlearn/estimators.hpp"

namespace unlearn {

/// k log-uniform values from lo to hi; both endpoints are returned exactly.
std::vector<double> log_grid(double lo, double hi, std::size_t k);

enum class TunedMethod { uls_plus, graddiff, transfer_ridge };
std::string_view to_string(TunedMethod m) noexcept;
TunedMethod tuned_method(Method m);

struct CvSpec {
  std::size_t folds = 5;
  std::vector<double> grid = log_grid(1e-4, 1e4, 20);

  /// folds >= 2; grid nonempty, strictly increasing, positive.
  void validate() const;
};

struct CvEntry {
  double lambda;
  std::size_t fold;  // 1-based
  double mse;        // +inf when the fit was infeasible
};

struct CvResult {
  double lambda = 0.0;
  double score = 0.0;              // mean held-out MSE at lambda
  std::vector<double> mean_score;  // one per grid point
  std::vector<CvEntry> table;      // grid-major, folds inner
  std::vector<std::size_t> fold_of;  // 1-based fold of each subsample row
};

/// K-fold CV over the subsample. Each fold fit sees the model, the forget
/// moments and the other folds; its score is the squared prediction error on
/// the held-out fold. Ties go to the larger lambda. GradDiff fits that are
/// not positive definite score +inf.
CvResult cv_select(TunedMethod method, const PretrainedModel& model, const ForgetMoments& forget,
                   const Dataset& sub, const CvSpec& spec, RngStream& rng);
CvResult cv_select(TunedMethod method, const PretrainedModel& model, const Dataset& forget,
                   const Dataset& sub, const CvSpec& spec, RngStream& rng);

/// omega_r omega_f |ols(sub) - ols(forget)|, the discrepancy replaced by its
/// subsample estimate.
double plugin_uls_plus_lambda(const PretrainedModel& model, const SufficientStats& forget,
                              const SufficientStats& sub);
double plugin_uls_plus_lambda(const PretrainedModel& model, const Dataset& forget,
                              const Dataset& sub);

/// Fits `method` at `lambda` on moments.
EstimateResult fit_tuned(TunedMethod method, double lambda, const PretrainedModel& model,
                         const ForgetMoments& forget, const SufficientStats& sub);

}  // namespace unlearn
