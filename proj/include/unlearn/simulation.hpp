#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "unlearn/data.hpp"
#include "unlearn/estimators.hpp"
#include "unlearn/tuning.hpp"

namespace unlearn {

/// Every method, in output order.
const std::vector<Method>& all_methods();

struct SimConfig {
  std::size_t n_r = 20000;
  std::size_t n_f = 1000;
  std::size_t p = 50;
  double subsample_ratio = 0.2;
  double delta = 2.0;
  double rho_f = 0.3;
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  std::vector<Method> methods = all_methods();
  std::size_t v_direction = 1;  // 1-based coordinate for the intervals
  double alpha = 0.05;
  bool oracle_lambda = false;   // theory rules instead of CV (delta is known here)
  bool redraw_truth = false;    // new theta_r every rep
  bool timing = false;          // fill per-record millis
  std::size_t threads = 0;      // 0: hardware concurrency
  CvSpec cv;

  void validate() const;
  std::size_t n_sub() const;

  static SimConfig table1();
  /// Seconds-scale configuration for smoke runs.
  static SimConfig tiny();
};

struct Truth {
  Vector theta_r;
  Vector theta_f;
};

/// theta_r ~ N(0, I_p); theta_f = theta_r + delta 1_p / sqrt(p).
Truth draw_truth(const SimConfig& cfg, RngStream& rng);

struct RepData {
  Dataset remaining;
  Dataset forget;
  Dataset sub;
};

/// remaining x ~ N(0, I), forget x ~ N(0, AR(rho_f)), N(0, 1) noise on both;
/// sub is a uniform subsample of remaining without replacement. `data` drives
/// the draws and `pick` the subsample.
RepData generate_rep(const SimConfig& cfg, const Truth& truth, RngStream& data, RngStream& pick);

struct RepRecord {
  std::size_t rep = 0;
  Method method = Method::uls;
  std::optional<double> error;    // |theta_hat - theta_r|_2; empty when the fit failed
  std::optional<bool> covered;    // uls and ols only
  std::optional<double> sd_hat;   // sqrt of the variance estimate
  std::optional<double> point;    // e_v^T theta_hat for the interval methods
  std::optional<double> lambda;
  std::optional<double> millis;
  std::string failure;            // error name when the fit failed
};

struct MethodSummary {
  Method method = Method::uls;
  std::size_t ok = 0;
  std::size_t failures = 0;
  double mean_error = 0.0;
  double median_error = 0.0;
  double q1_error = 0.0;
  double q3_error = 0.0;
  std::optional<double> coverage;
  std::optional<double> coverage_se;  // sqrt(c (1 - c) / R)
  std::optional<double> mean_sd;
  std::optional<double> empirical_sd;  // Monte Carlo sd of the point estimates
  double total_millis = 0.0;
};

struct SimSummary {
  SimConfig config;
  std::vector<MethodSummary> methods;
  double wall_seconds = 0.0;

  const MethodSummary* find(Method m) const;
};

struct ExperimentResult {
  std::vector<RepRecord> records;  // rep-major, methods in all_methods() order
  SimSummary summary;
};

/// Runs one replication. Streams are keyed by (seed, rep), so the result does
/// not depend on which worker runs it.
std::vector<RepRecord> run_rep(const SimConfig& cfg, const Truth& truth, std::size_t rep);

ExperimentResult run_experiment(const SimConfig& cfg);

SimSummary summarize(const SimConfig& cfg, const std::vector<RepRecord>& records);

/// Type-7 sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Mean squared prediction error on `test`.
double mpe(std::span<const double> theta, const Dataset& test);

/// rep,method,error,covered,sd_hat,millis
void write_records_csv(std::ostream& out, const std::vector<RepRecord>& records);

// ---------------------------------------------------------------------------
// Prediction benchmark on user data.
// ---------------------------------------------------------------------------

enum class LambdaMode { cv, fixed, plugin };

struct BenchConfig {
  double subsample_ratio = 0.2;
  std::uint64_t seed = 1;
  std::vector<Method> methods = all_methods();
  LambdaMode lambda_mode = LambdaMode::cv;
  std::optional<double> lambda;  // for LambdaMode::fixed
  CvSpec cv;
  bool timing = false;
};

struct BenchRow {
  Method method = Method::uls;
  std::optional<double> mpe;
  std::optional<double> lambda;
  std::optional<double> millis;
  std::string failure;
};

/// Pretrains on remaining + forget, subsamples remaining, fits each method and
/// scores it on `test`.
std::vector<BenchRow> run_bench(const Dataset& remaining, const Dataset& forget,
                                const Dataset& test, const BenchConfig& cfg);

/// method,mpe,millis
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace unlearn
