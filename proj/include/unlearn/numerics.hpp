#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace unlearn {

using Vector = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return entries_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {entries_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {entries_.data() + i * cols_, cols_};
  }

  std::span<double> entries() noexcept { return entries_; }
  std::span<const double> entries() const noexcept { return entries_; }
  double* data() noexcept { return entries_.data(); }
  const double* data() const noexcept { return entries_.data(); }

  /// Appends the rows of `other`; column counts must agree.
  void append_rows(const Matrix& other);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

// Small dense helpers. All throw DimensionMismatch on shape errors.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector multiply(const Matrix& a, std::span<const double> x);
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix linear_combination(double wa, const Matrix& a, double wb, const Matrix& b);
double frobenius_norm(const Matrix& a);
double trace(const Matrix& a);
bool all_finite(std::span<const double> v) noexcept;

/// Lower-triangular Cholesky factor L of an SPD matrix A = L L^T.
class SpdFactor {
 public:
  std::size_t dim() const noexcept { return dim_; }
  double lower(std::size_t i, std::size_t j) const noexcept { return l_[i * dim_ + j]; }

  /// Solves A x = b.
  Vector solve(std::span<const double> b) const;

  /// Returns y = L z (used to colour standard normal draws).
  Vector apply_lower(std::span<const double> z) const;

  Matrix lower_matrix() const;
  Matrix reconstruct() const;

 private:
  friend SpdFactor cholesky(const Matrix& a);
  SpdFactor(std::size_t dim, std::vector<double> l) : dim_(dim), l_(std::move(l)) {}

  std::size_t dim_ = 0;
  std::vector<double> l_;
};

/// Throws NotPositiveDefinite when a pivot falls at or below
/// 1e-12 * trace(a) / dim, and InvalidArgument when a is not square or not
/// symmetric within 1e-12 relative to its largest entry.
SpdFactor cholesky(const Matrix& a);

Vector spd_solve(const SpdFactor& f, std::span<const double> b);

/// (j, k) entry rho^|j - k|.
Matrix ar1_covariance(std::size_t p, double rho);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration started
/// from the all-ones direction.
double max_eigenvalue(const Matrix& a, int iterations = 50);

/// Standard normal quantile function Phi^{-1}(prob), prob in (0, 1).
double normal_quantile(double prob);

}  // namespace unlearn
