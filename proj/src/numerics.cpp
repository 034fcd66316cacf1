#include "unlearn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "unlearn/error.hpp"
#include "unlearn/simd.hpp"

namespace unlearn {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  require_same_size(entries_.size(), rows * cols, "Matrix entry count");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::append_rows(const Matrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
  require_same_size(cols_, other.cols_, "append_rows columns");
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
  rows_ += other.rows_;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  return simd::active().dot(a.data(), b.data(), a.size());
}

double norm2(std::span<const double> a) {
  // Scaled accumulation so huge iterates (divergence checks) do not overflow.
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : a) {
    const double t = v / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

Vector add(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(std::span<const double> a, double s) {
  Vector out(a.begin(), a.end());
  for (double& v : out) v *= s;
  return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  simd::active().axpy(alpha, x.data(), y.data(), x.size());
}

Vector multiply(const Matrix& a, std::span<const double> x) {
  require_same_size(a.cols(), x.size(), "matrix-vector product");
  Vector out(a.rows());
  if (a.rows() > 0) simd::active().matvec(a.data(), a.rows(), a.cols(), x.data(), out.data());
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require_same_size(a.cols(), b.rows(), "matrix product");
  Matrix out(a.rows(), b.cols());
  const auto& k = simd::active();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t l = 0; l < a.cols(); ++l) {
      k.axpy(a(i, l), b.row(l).data(), out.row(i).data(), b.cols());
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix linear_combination(double wa, const Matrix& a, double wb, const Matrix& b) {
  require_same_size(a.rows(), b.rows(), "linear_combination rows");
  require_same_size(a.cols(), b.cols(), "linear_combination cols");
  Matrix out(a.rows(), a.cols());
  auto o = out.entries();
  auto ea = a.entries();
  auto eb = b.entries();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = wa * ea[i] + wb * eb[i];
  return out;
}

double frobenius_norm(const Matrix& a) { return norm2(a.entries()); }

double trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

SpdFactor cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, "cholesky needs a square matrix");
  }
  double max_abs = 0.0;
  for (double v : a.entries()) max_abs = std::max(max_abs, std::abs(v));
  if (!std::isfinite(max_abs)) {
    throw Error(ErrorKind::InvalidArgument, "cholesky input has non-finite entries");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * max_abs) {
        throw Error(ErrorKind::InvalidArgument,
                    "cholesky input is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
      }
    }
  }

  const double floor = n == 0 ? 0.0 : 1e-12 * trace(a) / static_cast<double>(n);
  const auto& k = simd::active();
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double* lj = l.data() + j * n;
    const double pivot = a(j, j) - k.dot(lj, lj, j);
    if (!(pivot > floor)) {
      throw Error(ErrorKind::NotPositiveDefinite,
                  "pivot " + std::to_string(j) + " is " + std::to_string(pivot) +
                      " (floor " + std::to_string(floor) + ")");
    }
    const double diag = std::sqrt(pivot);
    l[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double* li = l.data() + i * n;
      l[i * n + j] = (a(i, j) - k.dot(li, lj, j)) / diag;
    }
  }
  return SpdFactor(n, std::move(l));
}

Vector SpdFactor::solve(std::span<const double> b) const {
  require_same_size(b.size(), dim_, "spd_solve");
  const auto& k = simd::active();
  Vector z(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* li = l_.data() + i * dim_;
    z[i] = (b[i] - k.dot(li, z.data(), i)) / li[i];
  }
  Vector x(dim_);
  for (std::size_t ii = dim_; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t r = ii + 1; r < dim_; ++r) s -= l_[r * dim_ + ii] * x[r];
    x[ii] = s / l_[ii * dim_ + ii];
  }
  return x;
}

Vector SpdFactor::apply_lower(std::span<const double> z) const {
  require_same_size(z.size(), dim_, "apply_lower");
  Vector out(dim_);
  const auto& k = simd::active();
  for (std::size_t i = 0; i < dim_; ++i) out[i] = k.dot(l_.data() + i * dim_, z.data(), i + 1);
  return out;
}

Matrix SpdFactor::lower_matrix() const { return Matrix(dim_, dim_, l_); }

Matrix SpdFactor::reconstruct() const {
  const Matrix l = lower_matrix();
  return multiply(l, transpose(l));
}

Vector spd_solve(const SpdFactor& f, std::span<const double> b) { return f.solve(b); }

Matrix ar1_covariance(std::size_t p, double rho) {
  if (p == 0) throw Error(ErrorKind::InvalidArgument, "ar1_covariance needs p >= 1");
  if (!(rho > -1.0 && rho < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "ar1_covariance needs rho in (-1, 1)");
  }
  Matrix s(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    s(j, j) = 1.0;
    double v = 1.0;
    for (std::size_t k = j + 1; k < p; ++k) {
      v *= rho;
      s(j, k) = v;
      s(k, j) = v;
    }
  }
  return s;
}

double max_eigenvalue(const Matrix& a, int iterations) {
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = multiply(a, v);
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    lambda = dot(v, w);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
  }
  // Rayleigh quotient at the final iterate.
  return std::max(lambda, dot(v, multiply(a, v)));
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "normal_quantile needs prob in (0, 1)");
  }
  // Acklam's rational approximation (relative error below 1.2e-9), followed by
  // one Halley step against erfc which brings it to full double precision.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (prob < p_low) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - p_low) {
    const double q = prob - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - prob;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace unlearn
