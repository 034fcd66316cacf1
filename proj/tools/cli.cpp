#include "unlearn/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "unlearn/error.hpp"
#include "unlearn/estimators.hpp"
#include "unlearn/inference.hpp"
#include "unlearn/json_io.hpp"
#include "unlearn/simulation.hpp"
#include "unlearn/tuning.hpp"

namespace unlearn::cli {

namespace {

struct CvFlags {
  std::size_t folds = 5;
  double grid_lo = 1e-4;
  double grid_hi = 1e4;
  std::size_t grid_size = 20;

  CvSpec spec() const {
    CvSpec s;
    s.folds = folds;
    s.grid = grid_size == 1 ? std::vector<double>{grid_lo} : log_grid(grid_lo, grid_hi, grid_size);
    return s;
  }

  void add_to(CLI::App& app) {
    app.add_option("--folds", folds, "CV folds")->capture_default_str();
    app.add_option("--grid-lo", grid_lo, "smallest lambda candidate")->capture_default_str();
    app.add_option("--grid-hi", grid_hi, "largest lambda candidate")->capture_default_str();
    app.add_option("--grid-size", grid_size, "number of log-spaced candidates")
        ->capture_default_str();
  }
};

LambdaMode parse_lambda_mode(const std::string& s) {
  if (s == "cv") return LambdaMode::cv;
  if (s == "plugin") return LambdaMode::plugin;
  if (s == "fixed") return LambdaMode::fixed;
  throw Error(ErrorKind::InvalidArgument, "unknown lambda mode '" + s + "'");
}

std::vector<Method> parse_methods(const std::string& list) {
  if (list == "all") return all_methods();
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "empty method list");
  return out;
}

std::size_t thread_count(std::size_t flag) {
  if (const char* env = std::getenv("ULS_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidArgument, std::string("ULS_THREADS is not a count: ") + env);
  }
  return flag;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorKind::IoError, "write failed for " + path);
}

void write_json_to(const std::string& path, const Json& j, std::ostream& out) {
  write_text(path, j.dump(2) + "\n", out);
}

Dataset load(const std::string& path, Role role, std::optional<std::size_t> p = std::nullopt) {
  return load_csv(path, CsvSchema{role, p});
}

void write_cv_table(const std::string& path, const CvResult& r, std::ostream& out) {
  std::ostringstream s;
  s << "lambda,fold,mse\n";
  for (const auto& e : r.table) {
    s << format_double(e.lambda) << ',' << e.fold << ','
      << (std::isfinite(e.mse) ? format_double(e.mse) : std::string("inf")) << '\n';
  }
  write_text(path, s.str(), out);
}

// --- pretrain -------------------------------------------------------------

struct PretrainArgs {
  std::string data, remaining, forget, out, loss = "squared";
  std::optional<std::size_t> n_forget;
};

int cmd_pretrain(const PretrainArgs& a, std::ostream& out) {
  const LossId loss = parse_loss_id(a.loss);
  std::optional<Dataset> full;
  std::size_t n_forget = 0;
  if (!a.data.empty()) {
    if (!a.remaining.empty() || !a.forget.empty()) {
      throw Error(ErrorKind::InvalidArgument, "use either --data or --remaining/--forget");
    }
    full = load(a.data, Role::remaining);
    n_forget = a.n_forget.value_or(0);
    if (n_forget >= full->n()) {
      throw Error(ErrorKind::InvalidArgument, "--n-forget must be smaller than the row count");
    }
  } else {
    if (a.remaining.empty()) {
      throw Error(ErrorKind::InvalidArgument, "pretrain needs --data or --remaining");
    }
    const Dataset r = load(a.remaining, Role::remaining);
    if (a.forget.empty()) {
      full = r;
    } else {
      const Dataset f = load(a.forget, Role::forget, r.p());
      n_forget = f.n();
      full = concat(r, f, Role::remaining);
    }
    if (a.n_forget && *a.n_forget != n_forget) {
      throw Error(ErrorKind::InvalidArgument, "--n-forget disagrees with the forget file");
    }
  }
  check_responses(loss, *full);
  const PretrainedModel m = pretrain(loss, *full, full->n() - n_forget, n_forget);
  write_json_to(a.out, to_json(m), out);
  return kOk;
}

// --- unlearn --------------------------------------------------------------

struct UnlearnArgs {
  std::string model, forget, sub, out, method = "uls", lambda_mode = "cv", cv_table;
  std::optional<double> lambda;
  std::uint64_t seed = 1;
  CvFlags cv;
  std::optional<double> step;
  std::size_t t_max = 10000;
  double grad_tol = 1e-8;
};

int cmd_unlearn(const UnlearnArgs& a, std::ostream& out) {
  const Method method = parse_method(a.method);
  LambdaMode mode = parse_lambda_mode(a.lambda_mode);
  if (a.lambda) mode = LambdaMode::fixed;
  if (mode == LambdaMode::fixed && !a.lambda) {
    throw Error(ErrorKind::InvalidArgument, "--lambda-mode fixed needs --lambda");
  }
  const PretrainedModel model = load_model(a.model);
  const Dataset forget = load(a.forget, Role::forget, model.p());
  const Dataset sub = load(a.sub, Role::subsample, model.p());
  check_responses(model.loss, forget);
  check_responses(model.loss, sub);
  if (model.loss != LossId::squared && method != Method::gd && method != Method::pretrain) {
    throw Error(ErrorKind::InvalidArgument, "only gd and pretrain support a logistic model");
  }

  EstimateResult result;
  switch (method) {
    case Method::retrain:
      throw Error(ErrorKind::InvalidArgument,
                  "retrain needs the full remaining data; run pretrain on it instead");
    case Method::pretrain:
      result.theta = model.theta;
      result.method = Method::pretrain;
      break;
    case Method::ols: result = ols_fit(sub); break;
    case Method::uls: result = uls(model, forget, sub); break;
    case Method::gd: {
      GdConfig cfg;
      cfg.alpha = a.step;
      cfg.t_max = a.t_max;
      cfg.grad_tol = a.grad_tol;
      result = gd_unlearn(model.loss, model, forget, sub, cfg);
      break;
    }
    case Method::uls_plus:
    case Method::graddiff:
    case Method::transfer_ridge: {
      const TunedMethod t = tuned_method(method);
      double lambda = 0.0;
      if (mode == LambdaMode::fixed) {
        lambda = *a.lambda;
      } else if (mode == LambdaMode::plugin && t == TunedMethod::uls_plus) {
        lambda = plugin_uls_plus_lambda(model, forget, sub);
      } else {
        RngStream rng(a.seed, 3);
        const CvResult cv = cv_select(t, model, forget, sub, a.cv.spec(), rng);
        if (!a.cv_table.empty()) write_cv_table(a.cv_table, cv, out);
        lambda = cv.lambda;
      }
      const ForgetMoments fm = ForgetMoments::of(forget);
      result = fit_tuned(t, lambda, model, fm, compute_stats(sub));
      break;
    }
  }
  write_json_to(a.out, to_json(result), out);
  return kOk;
}

// --- infer ----------------------------------------------------------------

struct InferArgs {
  std::string model, forget, sub, out, v_file, method = "uls";
  std::optional<std::size_t> coord;
  double alpha = 0.05;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  if (a.coord.has_value() == !a.v_file.empty()) {
    throw Error(ErrorKind::InvalidArgument, "give exactly one of --coord or --v-file");
  }
  InferenceReport report;
  if (a.method == "ols") {
    const Dataset sub = load(a.sub, Role::subsample);
    const Vector v = a.coord ? coordinate_direction(sub.p(), *a.coord) : vector_from_json(load_json(a.v_file));
    report = ci_ols(sub, v, a.alpha);
  } else if (a.method == "uls") {
    const PretrainedModel model = load_model(a.model);
    const Dataset forget = load(a.forget, Role::forget, model.p());
    const Dataset sub = load(a.sub, Role::subsample, model.p());
    const Vector v = a.coord ? coordinate_direction(model.p(), *a.coord) : vector_from_json(load_json(a.v_file));
    report = ci_uls(model, forget, sub, v, a.alpha);
  } else {
    throw Error(ErrorKind::InvalidArgument, "--method must be uls or ols");
  }
  write_json_to(a.out, to_json(report), out);
  return kOk;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string preset = "table1", out, summary, methods = "all";
  std::optional<std::size_t> n_r, n_f, p, reps, coord;
  std::optional<double> ratio, delta, rho, alpha;
  std::uint64_t seed = 1;
  bool oracle_lambda = false, redraw_truth = false, timing = false;
  std::size_t threads = 0;
  CvFlags cv;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimConfig cfg;
  if (a.preset == "table1") {
    cfg = SimConfig::table1();
  } else if (a.preset == "tiny") {
    cfg = SimConfig::tiny();
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + a.preset + "'");
  }
  if (a.n_r) cfg.n_r = *a.n_r;
  if (a.n_f) cfg.n_f = *a.n_f;
  if (a.p) cfg.p = *a.p;
  if (a.reps) cfg.reps = *a.reps;
  if (a.coord) cfg.v_direction = *a.coord;
  if (a.ratio) cfg.subsample_ratio = *a.ratio;
  if (a.delta) cfg.delta = *a.delta;
  if (a.rho) cfg.rho_f = *a.rho;
  if (a.alpha) cfg.alpha = *a.alpha;
  cfg.seed = a.seed;
  cfg.methods = parse_methods(a.methods);
  cfg.oracle_lambda = a.oracle_lambda;
  cfg.redraw_truth = a.redraw_truth;
  cfg.timing = a.timing;
  cfg.threads = thread_count(a.threads);
  cfg.cv = a.cv.spec();

  const ExperimentResult res = run_experiment(cfg);
  std::ostringstream csv;
  write_records_csv(csv, res.records);
  if (a.out.empty() && a.summary.empty()) {
    write_json_to("", to_json(res.summary), out);
    return kOk;
  }
  if (!a.out.empty()) write_text(a.out, csv.str(), out);
  write_json_to(a.summary, to_json(res.summary), out);
  return kOk;
}

// --- bench ----------------------------------------------------------------

struct BenchArgs {
  std::string remaining, forget, test, out, methods = "all", lambda_mode = "cv";
  std::optional<double> lambda;
  double ratio = 0.2;
  std::uint64_t seed = 1;
  bool timing = false;
  std::size_t threads = 0;
  CvFlags cv;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  (void)thread_count(a.threads);  // validated; the benchmark itself is sequential
  BenchConfig cfg;
  cfg.subsample_ratio = a.ratio;
  cfg.seed = a.seed;
  cfg.methods = parse_methods(a.methods);
  cfg.lambda_mode = a.lambda ? LambdaMode::fixed : parse_lambda_mode(a.lambda_mode);
  cfg.lambda = a.lambda;
  cfg.cv = a.cv.spec();
  cfg.timing = a.timing;
  const Dataset remaining = load(a.remaining, Role::remaining);
  const Dataset forget = load(a.forget, Role::forget, remaining.p());
  const Dataset test = load(a.test, Role::test, remaining.p());
  const auto rows = run_bench(remaining, forget, test, cfg);
  std::ostringstream csv;
  write_bench_csv(csv, rows);
  write_text(a.out, csv.str(), out);
  return kOk;
}

int report(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  return is_input_error(e.kind()) ? kInputError : kMethodError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Machine unlearning for linear models", "unlearn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "unlearn 1.0.0");

  PretrainArgs pa;
  auto* pre = app.add_subcommand("pretrain", "fit the model on the full training data");
  pre->add_option("--data", pa.data, "CSV with every training row");
  pre->add_option("--n-forget", pa.n_forget, "count of forget rows in --data");
  pre->add_option("--remaining", pa.remaining, "CSV of remaining rows");
  pre->add_option("--forget", pa.forget, "CSV of forget rows");
  pre->add_option("--loss", pa.loss, "squared or logistic")->capture_default_str();
  pre->add_option("--out", pa.out, "model JSON path (stdout if omitted)");

  UnlearnArgs ua;
  auto* unl = app.add_subcommand("unlearn", "remove the forget set from a pre-trained model");
  unl->add_option("--model", ua.model, "model JSON")->required();
  unl->add_option("--forget", ua.forget, "forget CSV")->required();
  unl->add_option("--sub", ua.sub, "subsample CSV of remaining rows")->required();
  unl->add_option("--method", ua.method, "pretrain|ols|uls|uls_plus|graddiff|tl|gd")
      ->capture_default_str();
  unl->add_option("--lambda", ua.lambda, "fixed tuning parameter");
  unl->add_option("--lambda-mode", ua.lambda_mode, "cv, plugin (uls_plus) or fixed")
      ->capture_default_str();
  unl->add_option("--cv-table", ua.cv_table, "write lambda,fold,mse here");
  unl->add_option("--seed", ua.seed, "fold assignment seed")->capture_default_str();
  unl->add_option("--step", ua.step, "gd step size (default from the Gram spectrum)");
  unl->add_option("--t-max", ua.t_max, "gd iteration cap")->capture_default_str();
  unl->add_option("--grad-tol", ua.grad_tol, "gd stationarity tolerance")->capture_default_str();
  unl->add_option("--out", ua.out, "result JSON path (stdout if omitted)");
  ua.cv.add_to(*unl);

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "confidence interval for v^T theta_r");
  inf->add_option("--model", ia.model, "model JSON");
  inf->add_option("--forget", ia.forget, "forget CSV");
  inf->add_option("--sub", ia.sub, "subsample CSV")->required();
  inf->add_option("--coord", ia.coord, "1-based coordinate direction");
  inf->add_option("--v-file", ia.v_file, "JSON array with the direction");
  inf->add_option("--alpha", ia.alpha, "1 - confidence level")->capture_default_str();
  inf->add_option("--method", ia.method, "uls or ols")->capture_default_str();
  inf->add_option("--out", ia.out, "report JSON path (stdout if omitted)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment on synthetic data");
  sim->add_option("--preset", sa.preset, "table1 or tiny")->capture_default_str();
  sim->add_option("--nr", sa.n_r, "remaining rows");
  sim->add_option("--nf", sa.n_f, "forget rows");
  sim->add_option("--p", sa.p, "dimension");
  sim->add_option("--ratio", sa.ratio, "subsample size over N_r");
  sim->add_option("--delta", sa.delta, "|theta_f - theta_r|");
  sim->add_option("--rho", sa.rho, "AR(1) parameter of the forget covariates");
  sim->add_option("--reps", sa.reps, "replications");
  sim->add_option("--seed", sa.seed, "experiment seed")->capture_default_str();
  sim->add_option("--methods", sa.methods, "comma list or all")->capture_default_str();
  sim->add_option("--coord", sa.coord, "interval coordinate (1-based)");
  sim->add_option("--alpha", sa.alpha, "interval level");
  sim->add_flag("--oracle-lambda", sa.oracle_lambda, "use the theory rules for lambda");
  sim->add_flag("--redraw-truth", sa.redraw_truth, "draw theta_r anew every rep");
  sim->add_flag("--timing", sa.timing, "fill the millis column");
  sim->add_option("--threads", sa.threads, "worker threads (0: all cores)")->capture_default_str();
  sim->add_option("--out", sa.out, "records CSV path");
  sim->add_option("--summary", sa.summary, "summary JSON path (stdout if omitted)");
  sa.cv.add_to(*sim);

  BenchArgs ba;
  auto* ben = app.add_subcommand("bench", "test-set prediction error of every method");
  ben->add_option("--remaining", ba.remaining, "remaining CSV")->required();
  ben->add_option("--forget", ba.forget, "forget CSV")->required();
  ben->add_option("--test", ba.test, "test CSV")->required();
  ben->add_option("--ratio", ba.ratio, "subsample size over N_r")->capture_default_str();
  ben->add_option("--seed", ba.seed, "subsample and fold seed")->capture_default_str();
  ben->add_option("--methods", ba.methods, "comma list or all")->capture_default_str();
  ben->add_option("--lambda", ba.lambda, "fixed tuning parameter");
  ben->add_option("--lambda-mode", ba.lambda_mode, "cv, plugin (uls_plus) or fixed")
      ->capture_default_str();
  ben->add_flag("--timing", ba.timing, "fill the millis column");
  ben->add_option("--threads", ba.threads, "worker threads")->capture_default_str();
  ben->add_option("--out", ba.out, "CSV path (stdout if omitted)");
  ba.cv.add_to(*ben);

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (pre->parsed()) return cmd_pretrain(pa, out);
    if (unl->parsed()) return cmd_unlearn(ua, out);
    if (inf->parsed()) return cmd_infer(ia, out);
    if (sim->parsed()) return cmd_simulate(sa, out);
    if (ben->parsed()) return cmd_bench(ba, out);
  } catch (const Error& e) {
    return report(e, err);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: IoError: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kMethodError;
  }
  return kInputError;
}

}  // namespace unlearn::cli
