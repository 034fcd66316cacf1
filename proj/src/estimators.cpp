#include "unlearn/estimators.hpp"

#include <cmath>
#include <string>

#include "unlearn/error.hpp"
#include "unlearn/simd.hpp"

namespace unlearn {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::retrain: return "retrain";
    case Method::pretrain: return "pretrain";
    case Method::ols: return "ols";
    case Method::uls: return "uls";
    case Method::uls_plus: return "uls_plus";
    case Method::graddiff: return "graddiff";
    case Method::transfer_ridge: return "tl";
    case Method::gd: return "gd";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::retrain, Method::pretrain, Method::ols, Method::uls, Method::uls_plus,
                   Method::graddiff, Method::transfer_ridge, Method::gd}) {
    if (text == to_string(m)) return m;
  }
  if (text == "uls+") return Method::uls_plus;
  if (text == "transfer_ridge") return Method::transfer_ridge;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(text) + "'");
}

void GdConfig::validate() const {
  if (alpha && !(*alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "step size must be > 0");
  if (t_max < 1) throw Error(ErrorKind::InvalidArgument, "t_max must be >= 1");
  if (!(grad_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "grad_tol must be > 0");
}

ForgetMoments ForgetMoments::of(const Dataset& forget) {
  if (forget.empty()) return none(forget.p());
  return of(compute_stats(forget));
}

ForgetMoments ForgetMoments::of(const SufficientStats& forget) {
  return ForgetMoments{forget.n, forget.sigma, forget.m};
}

ForgetMoments ForgetMoments::none(std::size_t p) { return ForgetMoments{0, Matrix(p, p), Vector(p, 0.0)}; }

namespace {

SpdFactor factor_or_throw(const Matrix& a, ErrorKind kind, const std::string& what) {
  try {
    return cholesky(a);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    throw Error(kind, what + " (" + e.what() + ")");
  }
}

SpdFactor factor_gram(const SufficientStats& sub) {
  return factor_or_throw(sub.sigma, ErrorKind::SingularGram,
                         "subsample Gram matrix is singular, n = " + std::to_string(sub.n) +
                             ", p = " + std::to_string(sub.p()));
}

void require_p(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " has p = " +
                                                  std::to_string(got) + ", expected " +
                                                  std::to_string(expected));
  }
}

void check_unlearn_inputs(const PretrainedModel& model, const ForgetMoments& forget,
                          const SufficientStats& sub) {
  model.validate();
  require_p(model.p(), sub.p(), "subsample");
  require_p(model.p(), forget.p(), "forget set");
  if (sub.n == 0) throw Error(ErrorKind::EmptyDataset, "subsample is empty");
}

double as_double(std::size_t n) { return static_cast<double>(n); }

void check_finite(const Vector& theta, Method m) {
  if (!all_finite(theta)) {
    throw Error(ErrorKind::Diverged, std::string(to_string(m)) + " produced non-finite coefficients");
  }
}

// Xt(X d) over the rows of d.
Vector gram_times(const Dataset& d, std::span<const double> v) {
  Vector out(d.p(), 0.0);
  if (d.empty()) return out;
  const Vector u = multiply(d.x(), v);
  const auto& k = simd::active();
  for (std::size_t i = 0; i < d.n(); ++i) k.axpy(u[i], d.x().row(i).data(), out.data(), d.p());
  return out;
}

double squared_norm_of_product(const Dataset& d, std::span<const double> v) {
  if (d.empty()) return 0.0;
  const Vector u = multiply(d.x(), v);
  return dot(u, u);
}

}  // namespace

EstimateResult ols_from_stats(const SufficientStats& stats, Method tag) {
  if (stats.n < stats.p()) {
    throw Error(ErrorKind::SingularGram, "n = " + std::to_string(stats.n) + " < p = " +
                                             std::to_string(stats.p()));
  }
  const SpdFactor f = factor_or_throw(stats.sigma, ErrorKind::SingularGram, "Gram matrix is singular");
  EstimateResult r;
  r.theta = f.solve(stats.m);
  r.method = tag;
  check_finite(r.theta, tag);
  r.grad_residual = norm2(subtract(stats.m, multiply(stats.sigma, r.theta)));
  return r;
}

EstimateResult uls_from_stats(const PretrainedModel& model, const ForgetMoments& forget,
                              const SufficientStats& sub) {
  check_unlearn_inputs(model, forget, sub);
  EstimateResult r;
  r.method = Method::uls;
  if (forget.n == 0) {
    r.theta = model.theta;
    r.grad_residual = 0.0;
    return r;
  }
  const SpdFactor f = factor_gram(sub);
  // theta_p + (n_f / N_r) S^{-1} (F theta_p - g)
  Vector bias = subtract(multiply(forget.sigma, model.theta), forget.m);
  const Vector step = f.solve(bias);
  const double w = as_double(forget.n) / as_double(model.n_remaining);
  r.theta = model.theta;
  axpy(w, step, r.theta);
  check_finite(r.theta, r.method);

  const double n_total = as_double(model.n_total);
  const double wr = as_double(model.n_remaining) / n_total;
  const double wf = as_double(forget.n) / n_total;
  Vector g = multiply(sub.sigma, subtract(r.theta, model.theta));
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = 2.0 * (wr * g[j] - wf * bias[j]);
  r.grad_residual = norm2(g);
  return r;
}

EstimateResult uls_plus_from_stats(const PretrainedModel& model, const ForgetMoments& forget,
                                   const SufficientStats& sub, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidArgument, "uls_plus needs a finite lambda >= 0");
  }
  check_unlearn_inputs(model, forget, sub);
  EstimateResult r;
  r.method = Method::uls_plus;
  r.lambda_used = lambda;
  if (forget.n == 0) {
    // Nothing to forget: the pre-trained fit is already the answer.
    r.theta = model.theta;
    return r;
  }
  const double n_total = as_double(model.n_total);
  const double wr = as_double(model.n_remaining) / n_total;
  const double wf = as_double(forget.n) / n_total;
  // {(w_r + lambda) S}^{-1} (Sp theta_p + lambda M - w_f g)
  const SpdFactor f = factor_gram(sub);
  const Vector s_tp = multiply(sub.sigma, model.theta);
  const Vector f_tp = multiply(forget.sigma, model.theta);
  Vector rhs(model.p());
  for (std::size_t j = 0; j < rhs.size(); ++j) {
    rhs[j] = wr * s_tp[j] + wf * f_tp[j] + lambda * sub.m[j] - wf * forget.m[j];
  }
  r.theta = scaled(f.solve(rhs), 1.0 / (wr + lambda));
  check_finite(r.theta, r.method);

  const Vector s_t = multiply(sub.sigma, r.theta);
  Vector g(model.p());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = 2.0 * ((wr + lambda) * s_t[j] - rhs[j]);
  r.grad_residual = norm2(g);
  return r;
}

EstimateResult graddiff_from_stats(const ForgetMoments& forget, const SufficientStats& sub,
                                   double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidArgument, "graddiff needs a finite lambda > 0");
  }
  require_p(sub.p(), forget.p(), "forget set");
  // (lambda S - F) theta = lambda M - g
  const Matrix a = linear_combination(lambda, sub.sigma, -1.0, forget.sigma);
  const SpdFactor f = factor_or_throw(
      a, ErrorKind::IndefiniteObjective,
      "lambda * S_sub - S_forget is not positive definite at lambda = " + format_double(lambda));
  Vector rhs(sub.p());
  for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = lambda * sub.m[j] - forget.m[j];
  EstimateResult r;
  r.method = Method::graddiff;
  r.lambda_used = lambda;
  r.theta = f.solve(rhs);
  check_finite(r.theta, r.method);
  r.grad_residual = 2.0 * norm2(subtract(multiply(a, r.theta), rhs));
  return r;
}

EstimateResult transfer_ridge_from_stats(const PretrainedModel& model, const SufficientStats& sub,
                                         double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidArgument, "transfer ridge needs a finite lambda > 0");
  }
  require_p(model.p(), sub.p(), "subsample");
  // (S + lambda I) theta = M + lambda theta_p
  Matrix a = sub.sigma;
  for (std::size_t j = 0; j < a.rows(); ++j) a(j, j) += lambda;
  const SpdFactor f = factor_or_throw(a, ErrorKind::SingularGram, "S + lambda I is singular");
  Vector rhs = sub.m;
  axpy(lambda, model.theta, rhs);
  EstimateResult r;
  r.method = Method::transfer_ridge;
  r.lambda_used = lambda;
  r.theta = f.solve(rhs);
  check_finite(r.theta, r.method);
  r.grad_residual = 2.0 * norm2(subtract(multiply(a, r.theta), rhs));
  return r;
}

double default_step_size(LossId loss, const SufficientStats& sub, std::size_t n_remaining) {
  const double lmax = max_eigenvalue(sub.sigma, 50);
  if (!(lmax > 0.0)) throw Error(ErrorKind::SingularGram, "subsample Gram matrix is zero");
  const double curvature = loss == LossId::squared ? 1.0 : 0.25;
  return 0.9 / (curvature * as_double(n_remaining) * lmax);
}

namespace {

// Shared driver for the unlearning iteration. `sub_grad(theta)` returns the
// unscaled gradient of l(theta; D_sub).
template <typename SubGrad>
EstimateResult run_gd(const PretrainedModel& model, const Vector& forget_grad_at_p,
                      std::size_t n_sub, double alpha, const GdConfig& cfg, SubGrad sub_grad) {
  const double scale = as_double(model.n_remaining) / as_double(n_sub);
  const Vector anchor = scaled(sub_grad(model.theta), scale);
  const double theta_p_norm = norm2(model.theta);
  const double tol = cfg.grad_tol * (1.0 + theta_p_norm);
  const double blowup = 1e8 * (1.0 + theta_p_norm);

  auto residual = [&](const Vector& theta) {
    Vector r = scaled(sub_grad(theta), scale);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = (r[j] - anchor[j]) - forget_grad_at_p[j];
    return r;
  };

  EstimateResult out;
  out.method = Method::gd;
  Vector theta = model.theta;
  Vector r = residual(theta);
  double rnorm = norm2(r);
  std::size_t t = 0;
  while (rnorm > tol && t < cfg.t_max) {
    axpy(-alpha, r, theta);
    ++t;
    const double tn = norm2(theta);
    if (!std::isfinite(tn) || tn > blowup) {
      throw Error(ErrorKind::Diverged, "iterate norm " + format_double(tn) + " at t = " +
                                           std::to_string(t) + "; step size " +
                                           format_double(alpha) + " is too large");
    }
    if (cfg.on_iterate) cfg.on_iterate(t, theta);
    r = residual(theta);
    rnorm = norm2(r);
  }
  out.theta = std::move(theta);
  out.iterations = t;
  out.grad_residual = rnorm;
  return out;
}

}  // namespace

EstimateResult gd_unlearn_from_stats(const PretrainedModel& model, const ForgetMoments& forget,
                                     const SufficientStats& sub, const GdConfig& cfg) {
  cfg.validate();
  check_unlearn_inputs(model, forget, sub);
  if (model.loss != LossId::squared) {
    throw Error(ErrorKind::InvalidArgument, "moment-based gradient descent needs squared loss");
  }
  const double alpha = cfg.alpha ? *cfg.alpha : default_step_size(LossId::squared, sub, model.n_remaining);
  Vector forget_grad(model.p(), 0.0);
  if (forget.n > 0) {
    forget_grad = squared_loss_grad(SufficientStats{forget.sigma, forget.m, forget.n}, model.theta);
  }
  return run_gd(model, forget_grad, sub.n, alpha, cfg,
                [&](const Vector& theta) { return squared_loss_grad(sub, theta); });
}

EstimateResult gd_unlearn(LossId loss, const PretrainedModel& model, const Dataset& forget,
                          const Dataset& sub, const GdConfig& cfg) {
  if (loss != model.loss) {
    throw Error(ErrorKind::InvalidArgument, "loss '" + std::string(to_string(loss)) +
                                                "' differs from the model's '" +
                                                std::string(to_string(model.loss)) + "'");
  }
  if (loss == LossId::squared) {
    return gd_unlearn_from_stats(model, ForgetMoments::of(forget), compute_stats(sub), cfg);
  }
  cfg.validate();
  check_responses(loss, forget);
  check_responses(loss, sub);
  const SufficientStats sub_stats = compute_stats(sub);
  check_unlearn_inputs(model, ForgetMoments::none(forget.p()), sub_stats);
  const double alpha = cfg.alpha ? *cfg.alpha : default_step_size(loss, sub_stats, model.n_remaining);
  const Vector forget_grad = loss_grad(loss, model.theta, forget);
  return run_gd(model, forget_grad, sub.n(), alpha, cfg,
                [&](const Vector& theta) { return loss_grad(loss, theta, sub); });
}

EstimateResult ols_fit(const Dataset& d) {
  if (d.empty()) throw Error(ErrorKind::EmptyDataset, "ols_fit on an empty dataset");
  if (d.n() < d.p()) {
    throw Error(ErrorKind::SingularGram,
                "n = " + std::to_string(d.n()) + " < p = " + std::to_string(d.p()));
  }
  return ols_from_stats(compute_stats(d));
}

EstimateResult uls(const PretrainedModel& model, const Dataset& forget, const Dataset& sub) {
  return uls_from_stats(model, ForgetMoments::of(forget), compute_stats(sub));
}

EstimateResult uls_plus(const PretrainedModel& model, const Dataset& forget, const Dataset& sub,
                        double lambda) {
  return uls_plus_from_stats(model, ForgetMoments::of(forget), compute_stats(sub), lambda);
}

EstimateResult graddiff(const PretrainedModel& model, const Dataset& forget, const Dataset& sub,
                        double lambda) {
  require_p(model.p(), sub.p(), "subsample");
  return graddiff_from_stats(ForgetMoments::of(forget), compute_stats(sub), lambda);
}

EstimateResult transfer_ridge(const PretrainedModel& model, const Dataset& sub, double lambda) {
  return transfer_ridge_from_stats(model, compute_stats(sub), lambda);
}

EstimateResult fit_logistic(const Dataset& d, const LogisticFitOptions& opts) {
  if (d.empty()) throw Error(ErrorKind::EmptyDataset, "logistic fit on an empty dataset");
  check_responses(LossId::logistic, d);
  const std::size_t p = d.p();
  const double tol = opts.grad_tol * as_double(d.n());

  const SufficientStats st = compute_stats(d);
  const double lmax = max_eigenvalue(st.sigma, 50);
  if (!(lmax > 0.0)) throw Error(ErrorKind::SingularGram, "design matrix is zero");
  double step = 1.0 / (0.25 * as_double(d.n()) * lmax);

  Vector theta(p, 0.0);
  Vector eta(d.n(), 0.0);
  Vector g = loss_grad(LossId::logistic, theta, d);
  double gnorm = norm2(g);
  std::size_t t = 0;
  while (gnorm > tol) {
    if (t >= opts.t_max) {
      throw Error(ErrorKind::NotConverged, "logistic fit hit t_max = " + std::to_string(opts.t_max) +
                                               " with gradient norm " + format_double(gnorm));
    }
    bool separates = true;
    for (std::size_t i = 0; i < d.n() && separates; ++i) {
      separates = d.y()[i] == 1.0 ? eta[i] > 0.0 : eta[i] < 0.0;
    }
    if (separates) {
      throw Error(ErrorKind::NotConverged,
                  "data are perfectly separable; the logistic loss has no finite minimizer");
    }
    // Armijo backtracking; the trial step doubles after every accepted one.
    // Near the optimum the decrease is far below the resolution of the loss
    // itself, so it is accumulated row by row instead of differencing totals.
    const double g2 = gnorm * gnorm;
    const Vector xg = multiply(d.x(), g);
    int halvings = 0;
    while (true) {
      double change = 0.0;
      for (std::size_t i = 0; i < d.n(); ++i) {
        const double de = -step * xg[i];
        const double s = eta[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-eta[i]))
                                       : std::exp(eta[i]) / (1.0 + std::exp(eta[i]));
        const double grow = de > 30.0 ? de + std::log(s) + std::log1p(std::exp(-de) / s - std::exp(-de))
                                      : std::log1p(s * std::expm1(de));
        change += grow - d.y()[i] * de;
      }
      if (change <= -0.5 * step * g2) break;
      step *= 0.5;
      if (++halvings > 60) {
        throw Error(ErrorKind::NotConverged, "line search failed at gradient norm " +
                                                 format_double(gnorm));
      }
    }
    axpy(-step, g, theta);
    eta = multiply(d.x(), theta);
    g = loss_grad(LossId::logistic, theta, d);
    gnorm = norm2(g);
    step *= 2.0;
    ++t;
  }
  EstimateResult r;
  r.theta = std::move(theta);
  r.method = Method::retrain;
  r.iterations = t;
  r.grad_residual = gnorm;
  return r;
}

EstimateResult fit_loss_minimizer(LossId loss, const Dataset& d, Method tag) {
  EstimateResult r = loss == LossId::squared ? ols_fit(d) : fit_logistic(d);
  r.method = tag;
  return r;
}

PretrainedModel pretrain(LossId loss, const Dataset& full, std::size_t n_remaining,
                         std::size_t n_forget) {
  if (n_remaining + n_forget != full.n()) {
    throw Error(ErrorKind::InvalidArgument,
                "N_r + N_f = " + std::to_string(n_remaining + n_forget) +
                    " does not match the " + std::to_string(full.n()) + " training rows");
  }
  PretrainedModel m;
  m.theta = fit_loss_minimizer(loss, full, Method::pretrain).theta;
  m.n_total = full.n();
  m.n_remaining = n_remaining;
  m.n_forget = n_forget;
  m.loss = loss;
  m.validate();
  return m;
}

double uls_objective(std::span<const double> theta, const PretrainedModel& model,
                     const Dataset& forget, const Dataset& sub) {
  const double n_total = as_double(model.n_total);
  const Vector d = subtract(model.theta, theta);
  const double anchor = as_double(model.n_remaining) / (n_total * as_double(sub.n())) *
                            squared_norm_of_product(sub, d) +
                        squared_norm_of_product(forget, d) / n_total;
  return -loss_value(LossId::squared, theta, forget) / n_total + anchor;
}

Vector uls_objective_grad(std::span<const double> theta, const PretrainedModel& model,
                          const Dataset& forget, const Dataset& sub) {
  const double n_total = as_double(model.n_total);
  const Vector d = subtract(model.theta, theta);
  Vector g = scaled(loss_grad(LossId::squared, theta, forget), -1.0 / n_total);
  axpy(-2.0 * as_double(model.n_remaining) / (n_total * as_double(sub.n())), gram_times(sub, d), g);
  axpy(-2.0 / n_total, gram_times(forget, d), g);
  return g;
}

double uls_plus_objective(std::span<const double> theta, const PretrainedModel& model,
                          const Dataset& forget, const Dataset& sub, double lambda) {
  return uls_objective(theta, model, forget, sub) +
         lambda / as_double(sub.n()) * loss_value(LossId::squared, theta, sub);
}

Vector uls_plus_objective_grad(std::span<const double> theta, const PretrainedModel& model,
                               const Dataset& forget, const Dataset& sub, double lambda) {
  Vector g = uls_objective_grad(theta, model, forget, sub);
  axpy(lambda / as_double(sub.n()), loss_grad(LossId::squared, theta, sub), g);
  return g;
}

double graddiff_objective(std::span<const double> theta, const Dataset& forget,
                          const Dataset& sub, double lambda) {
  double v = lambda / as_double(sub.n()) * loss_value(LossId::squared, theta, sub);
  if (!forget.empty()) v -= loss_value(LossId::squared, theta, forget) / as_double(forget.n());
  return v;
}

Vector graddiff_objective_grad(std::span<const double> theta, const Dataset& forget,
                               const Dataset& sub, double lambda) {
  Vector g = scaled(loss_grad(LossId::squared, theta, sub), lambda / as_double(sub.n()));
  if (!forget.empty()) {
    axpy(-1.0 / as_double(forget.n()), loss_grad(LossId::squared, theta, forget), g);
  }
  return g;
}

double transfer_ridge_objective(std::span<const double> theta, const PretrainedModel& model,
                                const Dataset& sub, double lambda) {
  const Vector d = subtract(theta, model.theta);
  return loss_value(LossId::squared, theta, sub) / as_double(sub.n()) + lambda * dot(d, d);
}

Vector transfer_ridge_objective_grad(std::span<const double> theta, const PretrainedModel& model,
                                     const Dataset& sub, double lambda) {
  Vector g = scaled(loss_grad(LossId::squared, theta, sub), 1.0 / as_double(sub.n()));
  axpy(2.0 * lambda, subtract(theta, model.theta), g);
  return g;
}

}  // namespace unlearn
