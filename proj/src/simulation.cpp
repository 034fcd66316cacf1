#include "unlearn/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

#include "unlearn/error.hpp"
#include "unlearn/inference.hpp"

namespace unlearn {

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::retrain,  Method::pretrain, Method::ols,
                                           Method::uls,      Method::uls_plus, Method::graddiff,
                                           Method::transfer_ridge, Method::gd};
  return methods;
}

namespace {

// Stream ids: 0 draws the truth; rep r uses (r + 1) << 4 | purpose.
enum StreamPurpose : std::uint64_t { kData = 1, kSubsample = 2, kFolds = 3, kTruth = 4 };

std::uint64_t rep_stream(std::size_t rep, StreamPurpose purpose) {
  return (static_cast<std::uint64_t>(rep) + 1) << 4 | purpose;
}

std::vector<Method> ordered(const std::vector<Method>& requested) {
  std::vector<Method> out;
  for (Method m : all_methods()) {
    if (std::find(requested.begin(), requested.end(), m) != requested.end()) out.push_back(m);
  }
  return out;
}

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct FitContext {
  const PretrainedModel& model;
  const ForgetMoments& forget;
  const SufficientStats& remaining;
  const SufficientStats& sub;
  std::function<double(TunedMethod)> choose_lambda;
};

EstimateResult fit_method(Method m, const FitContext& ctx) {
  switch (m) {
    case Method::retrain: return ols_from_stats(ctx.remaining, Method::retrain);
    case Method::pretrain: {
      EstimateResult r;
      r.theta = ctx.model.theta;
      r.method = Method::pretrain;
      return r;
    }
    case Method::ols: return ols_from_stats(ctx.sub, Method::ols);
    case Method::uls: return uls_from_stats(ctx.model, ctx.forget, ctx.sub);
    case Method::gd: return gd_unlearn_from_stats(ctx.model, ctx.forget, ctx.sub, GdConfig{});
    case Method::uls_plus:
    case Method::graddiff:
    case Method::transfer_ridge: {
      const TunedMethod t = tuned_method(m);
      return fit_tuned(t, ctx.choose_lambda(t), ctx.model, ctx.forget, ctx.sub);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown method");
}

double oracle_lambda(TunedMethod t, const SimConfig& cfg, const PretrainedModel& model,
                     std::size_t n_sub) {
  const double p = static_cast<double>(cfg.p);
  const double ns = static_cast<double>(n_sub);
  const double n = static_cast<double>(model.n_total);
  const double wf = static_cast<double>(model.n_forget) / n;
  const double wr = 1.0 - wf;
  switch (t) {
    case TunedMethod::uls_plus: return wr * wf * cfg.delta;
    case TunedMethod::transfer_ridge: return std::sqrt(p / ns) / (std::sqrt(p / n) + wf * cfg.delta);
    case TunedMethod::graddiff: {
      // Convexity floor 2 lambda_max(Sigma_f) / lambda_min(Sigma_r), Sigma_r = I.
      const double floor = 2.0 * max_eigenvalue(ar1_covariance(cfg.p, cfg.rho_f), 200);
      if (wf == 0.0) return floor;
      const double tilde_wr = ns / static_cast<double>(model.n_remaining);
      return std::max(std::sqrt(tilde_wr / wf) + std::sqrt(ns / p) * cfg.delta, floor);
    }
  }
  return 1.0;
}

}  // namespace

void SimConfig::validate() const {
  if (n_r < 1) throw Error(ErrorKind::InvalidArgument, "n_r must be >= 1");
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "p must be >= 1");
  if (!(subsample_ratio > 0.0 && subsample_ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "subsample ratio must lie in (0, 1]");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::InvalidArgument, "delta must be finite and >= 0");
  }
  if (!(rho_f > -1.0 && rho_f < 1.0)) throw Error(ErrorKind::InvalidArgument, "rho_f must lie in (-1, 1)");
  if (reps < 1) throw Error(ErrorKind::InvalidArgument, "reps must be >= 1");
  if (methods.empty()) throw Error(ErrorKind::InvalidArgument, "no methods requested");
  if (v_direction < 1 || v_direction > p) {
    throw Error(ErrorKind::InvalidArgument, "interval coordinate must lie in 1..p");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  if (n_sub() < 1) throw Error(ErrorKind::InvalidArgument, "subsample would be empty");
  cv.validate();
}

std::size_t SimConfig::n_sub() const {
  return static_cast<std::size_t>(std::llround(subsample_ratio * static_cast<double>(n_r)));
}

SimConfig SimConfig::table1() { return SimConfig{}; }

SimConfig SimConfig::tiny() {
  SimConfig c;
  c.n_r = 500;
  c.n_f = 25;
  c.p = 5;
  c.reps = 20;
  return c;
}

const MethodSummary* SimSummary::find(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return &s;
  }
  return nullptr;
}

Truth draw_truth(const SimConfig& cfg, RngStream& rng) {
  Truth t;
  t.theta_r.resize(cfg.p);
  rng.fill_normal(t.theta_r);
  t.theta_f = t.theta_r;
  const double shift = cfg.delta / std::sqrt(static_cast<double>(cfg.p));
  for (double& x : t.theta_f) x += shift;
  return t;
}

RepData generate_rep(const SimConfig& cfg, const Truth& truth, RngStream& data, RngStream& pick) {
  Matrix xr = sample_standard_normal(data, cfg.n_r, cfg.p);
  Vector yr = multiply(xr, truth.theta_r);
  for (double& y : yr) y += data.normal();

  const Vector zero(cfg.p, 0.0);
  Matrix xf = sample_gaussian(data, zero, cholesky(ar1_covariance(cfg.p, cfg.rho_f)), cfg.n_f);
  Vector yf = cfg.n_f > 0 ? multiply(xf, truth.theta_f) : Vector{};
  for (double& y : yf) y += data.normal();
  if (cfg.n_f == 0) xf = Matrix(0, cfg.p);

  Dataset remaining(std::move(xr), std::move(yr), Role::remaining);
  Dataset forget(std::move(xf), std::move(yf), Role::forget);
  Dataset sub = subsample(remaining, cfg.n_sub(), pick);
  return RepData{std::move(remaining), std::move(forget), std::move(sub)};
}

std::vector<RepRecord> run_rep(const SimConfig& cfg, const Truth& fixed_truth, std::size_t rep) {
  Truth redrawn;
  if (cfg.redraw_truth) {
    RngStream t(cfg.seed, rep_stream(rep, kTruth));
    redrawn = draw_truth(cfg, t);
  }
  const Truth& truth = cfg.redraw_truth ? redrawn : fixed_truth;

  RngStream data_rng(cfg.seed, rep_stream(rep, kData));
  RngStream pick_rng(cfg.seed, rep_stream(rep, kSubsample));
  const RepData d = generate_rep(cfg, truth, data_rng, pick_rng);

  const SufficientStats st_r = compute_stats(d.remaining);
  const SufficientStats st_sub = compute_stats(d.sub);
  const ForgetMoments fm = ForgetMoments::of(d.forget);

  PretrainedModel model;
  model.n_remaining = cfg.n_r;
  model.n_forget = cfg.n_f;
  model.n_total = cfg.n_r + cfg.n_f;
  model.loss = LossId::squared;
  model.theta = cfg.n_f > 0 ? ols_from_stats(pool_stats(st_r, compute_stats(d.forget))).theta
                            : ols_from_stats(st_r).theta;

  auto choose = [&](TunedMethod t) {
    if (cfg.oracle_lambda) return oracle_lambda(t, cfg, model, d.sub.n());
    RngStream folds(cfg.seed, rep_stream(rep, kFolds));
    return cv_select(t, model, fm, d.sub, cfg.cv, folds).lambda;
  };
  const FitContext ctx{model, fm, st_r, st_sub, choose};
  const Vector v = coordinate_direction(cfg.p, cfg.v_direction);
  const double target = truth.theta_r[cfg.v_direction - 1];

  std::vector<RepRecord> out;
  for (Method m : ordered(cfg.methods)) {
    RepRecord r;
    r.rep = rep;
    r.method = m;
    const auto start = Clock::now();
    try {
      const EstimateResult est = fit_method(m, ctx);
      r.error = norm2(subtract(est.theta, truth.theta_r));
      r.lambda = est.lambda_used;
      if (m == Method::uls || m == Method::ols) {
        const SpdFactor gram = cholesky(st_sub.sigma);
        const InferenceReport rep_ci =
            m == Method::uls
                ? ci_uls_from_parts(v, d.sub, gram, est.theta, model.theta, cfg.n_r, cfg.alpha)
                : ci_ols_from_parts(v, d.sub, gram, est.theta, cfg.alpha);
        r.covered = rep_ci.ci_lo <= target && target <= rep_ci.ci_hi;
        r.sd_hat = rep_ci.sd();
        r.point = rep_ci.point;
      }
    } catch (const Error& e) {
      r.error.reset();
      r.covered.reset();
      r.sd_hat.reset();
      r.point.reset();
      r.failure = std::string(e.name());
    }
    if (cfg.timing) r.millis = millis_since(start);
    out.push_back(std::move(r));
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyDataset, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SimSummary summarize(const SimConfig& cfg, const std::vector<RepRecord>& records) {
  SimSummary s;
  s.config = cfg;
  for (Method m : ordered(cfg.methods)) {
    MethodSummary ms;
    ms.method = m;
    std::vector<double> errors, sds, points;
    std::size_t covered = 0, with_ci = 0;
    for (const auto& r : records) {
      if (r.method != m) continue;
      if (r.millis) ms.total_millis += *r.millis;
      if (!r.error) {
        ++ms.failures;
        continue;
      }
      errors.push_back(*r.error);
      if (r.covered) {
        ++with_ci;
        covered += *r.covered ? 1 : 0;
      }
      if (r.sd_hat) sds.push_back(*r.sd_hat);
      if (r.point) points.push_back(*r.point);
    }
    ms.ok = errors.size();
    if (!errors.empty()) {
      double sum = 0.0;
      for (double e : errors) sum += e;
      ms.mean_error = sum / static_cast<double>(errors.size());
      std::sort(errors.begin(), errors.end());
      ms.q1_error = quantile_sorted(errors, 0.25);
      ms.median_error = quantile_sorted(errors, 0.5);
      ms.q3_error = quantile_sorted(errors, 0.75);
    }
    if (with_ci > 0) {
      const double c = static_cast<double>(covered) / static_cast<double>(with_ci);
      ms.coverage = c;
      ms.coverage_se = std::sqrt(c * (1.0 - c) / static_cast<double>(with_ci));
    }
    if (!sds.empty()) {
      double sum = 0.0;
      for (double x : sds) sum += x;
      ms.mean_sd = sum / static_cast<double>(sds.size());
    }
    if (points.size() >= 2) {
      double mean = 0.0;
      for (double x : points) mean += x;
      mean /= static_cast<double>(points.size());
      double ss = 0.0;
      for (double x : points) ss += (x - mean) * (x - mean);
      ms.empirical_sd = std::sqrt(ss / static_cast<double>(points.size() - 1));
    }
    s.methods.push_back(ms);
  }
  return s;
}

ExperimentResult run_experiment(const SimConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  RngStream truth_rng(cfg.seed, 0);
  const Truth truth = draw_truth(cfg, truth_rng);

  std::size_t threads = cfg.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.reps);

  std::vector<std::vector<RepRecord>> per_rep(cfg.reps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= cfg.reps) return;
      try {
        per_rep[rep] = run_rep(cfg, truth, rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cfg.reps);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  for (auto& recs : per_rep) {
    for (auto& r : recs) out.records.push_back(std::move(r));
  }
  out.summary = summarize(cfg, out.records);
  out.summary.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

double mpe(std::span<const double> theta, const Dataset& test) {
  if (test.empty()) throw Error(ErrorKind::EmptyDataset, "mpe needs a nonempty test set");
  return loss_value(LossId::squared, theta, test) / static_cast<double>(test.n());
}

namespace {

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string millis_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<RepRecord>& records) {
  out << "rep,method,error,covered,sd_hat,millis\n";
  for (const auto& r : records) {
    out << r.rep << ',' << to_string(r.method) << ',' << optional_cell(r.error) << ',';
    if (r.covered) out << (*r.covered ? 1 : 0);
    out << ',' << optional_cell(r.sd_hat) << ',' << millis_cell(r.millis) << '\n';
  }
}

std::vector<BenchRow> run_bench(const Dataset& remaining, const Dataset& forget,
                                const Dataset& test, const BenchConfig& cfg) {
  if (!(cfg.subsample_ratio > 0.0 && cfg.subsample_ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "subsample ratio must lie in (0, 1]");
  }
  if (cfg.methods.empty()) throw Error(ErrorKind::InvalidArgument, "no methods requested");
  if (cfg.lambda_mode == LambdaMode::fixed && !cfg.lambda) {
    throw Error(ErrorKind::InvalidArgument, "fixed lambda mode needs a lambda value");
  }
  const std::size_t p = remaining.p();
  if (forget.p() != p || test.p() != p) {
    throw Error(ErrorKind::DimensionMismatch, "remaining, forget and test must share p");
  }
  if (test.empty()) throw Error(ErrorKind::EmptyDataset, "test set is empty");
  cfg.cv.validate();

  const auto n_sub = static_cast<std::size_t>(
      std::llround(cfg.subsample_ratio * static_cast<double>(remaining.n())));
  RngStream pick(cfg.seed, kSubsample);
  const Dataset sub = subsample(remaining, std::max<std::size_t>(n_sub, 1), pick);

  const SufficientStats st_r = compute_stats(remaining);
  const SufficientStats st_sub = compute_stats(sub);
  const ForgetMoments fm = ForgetMoments::of(forget);
  PretrainedModel model;
  model.n_remaining = remaining.n();
  model.n_forget = forget.n();
  model.n_total = remaining.n() + forget.n();
  model.loss = LossId::squared;
  model.theta = forget.empty() ? ols_from_stats(st_r).theta
                               : ols_from_stats(pool_stats(st_r, compute_stats(forget))).theta;

  auto choose = [&](TunedMethod t) {
    if (cfg.lambda_mode == LambdaMode::fixed) return *cfg.lambda;
    if (cfg.lambda_mode == LambdaMode::plugin && t == TunedMethod::uls_plus) {
      return plugin_uls_plus_lambda(model, forget, sub);
    }
    RngStream folds(cfg.seed, kFolds);
    return cv_select(t, model, fm, sub, cfg.cv, folds).lambda;
  };
  const FitContext ctx{model, fm, st_r, st_sub, choose};

  std::vector<BenchRow> rows;
  for (Method m : ordered(cfg.methods)) {
    BenchRow row;
    row.method = m;
    const auto start = Clock::now();
    try {
      const EstimateResult est = fit_method(m, ctx);
      row.mpe = mpe(est.theta, test);
      row.lambda = est.lambda_used;
    } catch (const Error& e) {
      row.failure = std::string(e.name());
    }
    if (cfg.timing) row.millis = millis_since(start);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "method,mpe,millis\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << optional_cell(r.mpe) << ',' << millis_cell(r.millis)
        << '\n';
  }
}

}  // namespace unlearn
