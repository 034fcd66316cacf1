#include "unlearn/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "unlearn/error.hpp"

namespace unlearn {

std::vector<double> log_grid(double lo, double hi, std::size_t k) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::InvalidArgument, "log_grid needs 0 < lo < hi");
  }
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "log_grid needs k >= 2");
  std::vector<double> g(k);
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(k - 1);
  for (std::size_t i = 0; i < k; ++i) g[i] = std::exp(a + step * static_cast<double>(i));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::string_view to_string(TunedMethod m) noexcept {
  switch (m) {
    case TunedMethod::uls_plus: return "uls_plus";
    case TunedMethod::graddiff: return "graddiff";
    case TunedMethod::transfer_ridge: return "tl";
  }
  return "unknown";
}

TunedMethod tuned_method(Method m) {
  switch (m) {
    case Method::uls_plus: return TunedMethod::uls_plus;
    case Method::graddiff: return TunedMethod::graddiff;
    case Method::transfer_ridge: return TunedMethod::transfer_ridge;
    default: break;
  }
  throw Error(ErrorKind::InvalidArgument,
              "method '" + std::string(to_string(m)) + "' has no tuning parameter");
}

void CvSpec::validate() const {
  if (folds < 2) throw Error(ErrorKind::InvalidArgument, "CV needs at least 2 folds");
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "CV grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
      throw Error(ErrorKind::InvalidArgument, "CV grid values must be finite and > 0");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "CV grid must be strictly increasing");
    }
  }
}

EstimateResult fit_tuned(TunedMethod method, double lambda, const PretrainedModel& model,
                         const ForgetMoments& forget, const SufficientStats& sub) {
  switch (method) {
    case TunedMethod::uls_plus: return uls_plus_from_stats(model, forget, sub, lambda);
    case TunedMethod::graddiff: return graddiff_from_stats(forget, sub, lambda);
    case TunedMethod::transfer_ridge: return transfer_ridge_from_stats(model, sub, lambda);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown tuned method");
}

namespace {

double held_out_mse(const Dataset& fold, const Vector& theta) {
  const Vector fitted = multiply(fold.x(), theta);
  double s = 0.0;
  for (std::size_t i = 0; i < fold.n(); ++i) {
    const double r = fold.y()[i] - fitted[i];
    s += r * r;
  }
  return s / static_cast<double>(fold.n());
}

}  // namespace

CvResult cv_select(TunedMethod method, const PretrainedModel& model, const ForgetMoments& forget,
                   const Dataset& sub, const CvSpec& spec, RngStream& rng) {
  spec.validate();
  const std::size_t p = sub.p();
  if (sub.n() < spec.folds * (p + 1)) {
    throw Error(ErrorKind::InsufficientData,
                "CV needs n_sub >= folds * (p + 1) = " + std::to_string(spec.folds * (p + 1)) +
                    ", got " + std::to_string(sub.n()));
  }

  // Shuffled round-robin: position i of the permutation goes to fold i mod K.
  std::vector<std::size_t> perm(sub.n());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  }
  std::vector<std::vector<std::size_t>> fold_rows(spec.folds);
  for (std::size_t i = 0; i < perm.size(); ++i) fold_rows[i % spec.folds].push_back(perm[i]);

  const GramSums total = gram_sums(sub);
  std::vector<SufficientStats> train;
  std::vector<Dataset> held;
  train.reserve(spec.folds);
  held.reserve(spec.folds);
  for (auto& rows : fold_rows) {
    std::sort(rows.begin(), rows.end());
    GramSums rest = total;
    rest -= gram_sums(sub, rows);
    train.push_back(to_stats(rest));
    held.push_back(select_rows(sub, rows, Role::test));
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  CvResult out;
  out.fold_of.resize(sub.n());
  for (std::size_t i = 0; i < perm.size(); ++i) out.fold_of[perm[i]] = i % spec.folds + 1;
  out.table.reserve(spec.grid.size() * spec.folds);
  out.mean_score.assign(spec.grid.size(), inf);
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    const double lambda = spec.grid[g];
    double sum = 0.0;
    for (std::size_t k = 0; k < spec.folds; ++k) {
      double mse = inf;
      try {
        mse = held_out_mse(held[k], fit_tuned(method, lambda, model, forget, train[k]).theta);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::IndefiniteObjective) throw;
      }
      out.table.push_back({lambda, k + 1, mse});
      sum += mse;
    }
    out.mean_score[g] = sum / static_cast<double>(spec.folds);
  }

  // Candidates by score, larger lambda first among ties.
  std::vector<std::size_t> order(spec.grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.mean_score[a] != out.mean_score[b]) return out.mean_score[a] < out.mean_score[b];
    return a > b;
  });
  const SufficientStats full = method == TunedMethod::graddiff ? compute_stats(sub) : SufficientStats{};
  for (std::size_t g : order) {
    if (!std::isfinite(out.mean_score[g])) break;
    if (method == TunedMethod::graddiff) {
      try {
        (void)cholesky(linear_combination(spec.grid[g], full.sigma, -1.0, forget.sigma));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
        continue;
      }
    }
    out.lambda = spec.grid[g];
    out.score = out.mean_score[g];
    return out;
  }
  throw Error(ErrorKind::NoFeasibleLambda, "no lambda in the grid gives a feasible " +
                                               std::string(to_string(method)) + " fit");
}

CvResult cv_select(TunedMethod method, const PretrainedModel& model, const Dataset& forget,
                   const Dataset& sub, const CvSpec& spec, RngStream& rng) {
  if (forget.p() != sub.p()) {
    throw Error(ErrorKind::DimensionMismatch, "forget and subsample differ in p");
  }
  return cv_select(method, model, ForgetMoments::of(forget), sub, spec, rng);
}

double plugin_uls_plus_lambda(const PretrainedModel& model, const SufficientStats& forget,
                              const SufficientStats& sub) {
  if (forget.n < forget.p()) {
    throw Error(ErrorKind::InsufficientData,
                "plug-in lambda needs at least p forget rows to fit OLS on the forget set");
  }
  const Vector tf = ols_from_stats(forget).theta;
  const Vector ts = ols_from_stats(sub).theta;
  const WeightProfile w(model, sub.n);
  return w.omega_r * w.omega_f * norm2(subtract(ts, tf));
}

double plugin_uls_plus_lambda(const PretrainedModel& model, const Dataset& forget,
                              const Dataset& sub) {
  if (forget.empty()) {
    throw Error(ErrorKind::InsufficientData, "plug-in lambda needs a nonempty forget set");
  }
  return plugin_uls_plus_lambda(model, compute_stats(forget), compute_stats(sub));
}

}  // namespace unlearn
