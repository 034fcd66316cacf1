#include "unlearn/inference.hpp"

#include <cmath>
#include <string>

#include "unlearn/error.hpp"
#include "unlearn/estimators.hpp"

namespace unlearn {

std::string_view to_string(CiMethod m) noexcept { return m == CiMethod::uls ? "uls" : "ols"; }

namespace {

void check_direction(std::span<const double> v, std::size_t p) {
  if (v.size() != p) {
    throw Error(ErrorKind::DimensionMismatch, "direction has length " + std::to_string(v.size()) +
                                                  ", expected " + std::to_string(p));
  }
  if (!all_finite(v)) throw Error(ErrorKind::InvalidArgument, "direction has non-finite entries");
  for (double x : v) {
    if (x != 0.0) return;
  }
  throw Error(ErrorKind::DegenerateDirection, "direction v is the zero vector");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1), got " + format_double(alpha));
  }
}

SpdFactor sub_gram_factor(const SufficientStats& st) {
  try {
    return cholesky(st.sigma);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    throw Error(ErrorKind::SingularGram, std::string("subsample Gram matrix is singular (") +
                                             e.what() + ")");
  }
}

InferenceReport make_report(std::span<const double> v, double point, double variance,
                            double alpha, CiMethod method) {
  InferenceReport r;
  r.v.assign(v.begin(), v.end());
  r.point = point;
  r.variance = variance;
  r.alpha = alpha;
  r.method = method;
  const double half = z_multiplier(alpha) * std::sqrt(variance);
  r.ci_lo = point - half;
  r.ci_hi = point + half;
  return r;
}

}  // namespace

double InferenceReport::sd() const { return std::sqrt(variance); }

double z_multiplier(double alpha) {
  check_alpha(alpha);
  return normal_quantile(1.0 - alpha / 2.0);
}

NoiseTerms noise_terms(std::span<const double> v, const Dataset& sub, const SpdFactor& gram,
                       std::span<const double> theta_uls, std::span<const double> theta_p) {
  const std::size_t p = sub.p();
  if (gram.dim() != p || theta_uls.size() != p || theta_p.size() != p || v.size() != p) {
    throw Error(ErrorKind::DimensionMismatch, "noise_terms inputs disagree on p");
  }
  const Vector w = gram.solve(v);
  const Vector d = subtract(theta_uls, theta_p);
  const double vd = dot(v, d);
  const Vector xw = multiply(sub.x(), w);
  const Vector xt = multiply(sub.x(), theta_uls);
  const Vector xd = multiply(sub.x(), d);
  NoiseTerms t{Vector(sub.n()), Vector(sub.n())};
  for (std::size_t i = 0; i < sub.n(); ++i) {
    t.a[i] = xw[i] * (sub.y()[i] - xt[i]);
    t.b[i] = xw[i] * xd[i] - vd;
  }
  return t;
}

NoiseTerms noise_terms(std::span<const double> v, const Dataset& sub,
                       std::span<const double> theta_uls, std::span<const double> theta_p) {
  return noise_terms(v, sub, sub_gram_factor(compute_stats(sub)), theta_uls, theta_p);
}

double variance_uls(const NoiseTerms& terms, std::size_t n_remaining, std::size_t n_sub) {
  if (terms.a.size() != n_sub || terms.b.size() != n_sub) {
    throw Error(ErrorKind::DimensionMismatch, "noise terms must have one entry per subsample row");
  }
  if (n_sub == 0 || n_sub > n_remaining) {
    throw Error(ErrorKind::InvalidArgument, "need 1 <= n_sub <= N_r");
  }
  const double nr = static_cast<double>(n_remaining);
  const double ns = static_cast<double>(n_sub);
  const double cb = (ns - nr) / ns;
  double first = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < n_sub; ++i) {
    const double u = terms.a[i] + cb * terms.b[i];
    const double s = terms.a[i] + terms.b[i];
    first += u * u;
    second += s * s;
  }
  return first / (nr * nr) + (nr - ns) / (nr * nr * ns) * second;
}

InferenceReport ci_uls_from_parts(std::span<const double> v, const Dataset& sub,
                                  const SpdFactor& gram, std::span<const double> theta_uls,
                                  std::span<const double> theta_p, std::size_t n_remaining,
                                  double alpha) {
  check_alpha(alpha);
  check_direction(v, sub.p());
  const NoiseTerms t = noise_terms(v, sub, gram, theta_uls, theta_p);
  return make_report(v, dot(v, theta_uls), variance_uls(t, n_remaining, sub.n()), alpha,
                     CiMethod::uls);
}

InferenceReport ci_uls(const PretrainedModel& model, const Dataset& forget, const Dataset& sub,
                       std::span<const double> v, double alpha) {
  check_alpha(alpha);
  check_direction(v, model.p());
  if (model.loss != LossId::squared) {
    throw Error(ErrorKind::InvalidArgument, "ULS inference needs a squared-loss model");
  }
  const SufficientStats st = compute_stats(sub);
  const EstimateResult est = uls_from_stats(model, ForgetMoments::of(forget), st);
  return ci_uls_from_parts(v, sub, sub_gram_factor(st), est.theta, model.theta,
                           model.n_remaining, alpha);
}

InferenceReport ci_ols_from_parts(std::span<const double> v, const Dataset& sub,
                                  const SpdFactor& gram, std::span<const double> theta_ols,
                                  double alpha) {
  check_alpha(alpha);
  check_direction(v, sub.p());
  if (sub.n() <= sub.p()) {
    throw Error(ErrorKind::InsufficientData, "OLS interval needs n > p, got n = " +
                                                 std::to_string(sub.n()) + ", p = " +
                                                 std::to_string(sub.p()));
  }
  const Vector fitted = multiply(sub.x(), theta_ols);
  double rss = 0.0;
  for (std::size_t i = 0; i < sub.n(); ++i) {
    const double r = sub.y()[i] - fitted[i];
    rss += r * r;
  }
  const double n = static_cast<double>(sub.n());
  const double s2 = rss / (n - static_cast<double>(sub.p()));
  // (X^T X)^{-1} = S^{-1} / n
  const double quad = dot(v, gram.solve(v)) / n;
  return make_report(v, dot(v, theta_ols), s2 * quad, alpha, CiMethod::ols);
}

InferenceReport ci_ols(const Dataset& sub, std::span<const double> v, double alpha) {
  check_alpha(alpha);
  check_direction(v, sub.p());
  if (sub.n() <= sub.p()) {
    throw Error(ErrorKind::InsufficientData, "OLS interval needs n > p, got n = " +
                                                 std::to_string(sub.n()) + ", p = " +
                                                 std::to_string(sub.p()));
  }
  const SufficientStats st = compute_stats(sub);
  const SpdFactor f = sub_gram_factor(st);
  return ci_ols_from_parts(v, sub, f, f.solve(st.m), alpha);
}

Vector coordinate_direction(std::size_t p, std::size_t k) {
  if (k < 1 || k > p) {
    throw Error(ErrorKind::InvalidArgument, "coordinate " + std::to_string(k) +
                                                " is outside 1.." + std::to_string(p));
  }
  Vector e(p, 0.0);
  e[k - 1] = 1.0;
  return e;
}

}  // namespace unlearn
