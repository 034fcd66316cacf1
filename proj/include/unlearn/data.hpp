#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "unlearn/loss_id.hpp"
#include "unlearn/numerics.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

enum class Role { remaining, forget, subsample, test };

std::string_view to_string(Role role) noexcept;

/// Rows of (covariates, response). Only a forget set may be empty; p >= 1
/// always, so an empty forget set still knows its width.
class Dataset {
 public:
  Dataset(Matrix x, Vector y, Role role);

  std::size_t n() const noexcept { return x_.rows(); }
  std::size_t p() const noexcept { return x_.cols(); }
  bool empty() const noexcept { return n() == 0; }
  Role role() const noexcept { return role_; }

  const Matrix& x() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }

  Dataset with_role(Role role) const;

 private:
  Matrix x_;
  Vector y_;
  Role role_;
};

Dataset concat(const Dataset& a, const Dataset& b, Role role);
Dataset select_rows(const Dataset& d, std::span<const std::size_t> rows, Role role);

/// Unnormalized moments X^T X and X^T y over n rows. Only the upper triangle
/// of xtx is maintained until `to_stats`.
struct GramSums {
  Matrix xtx;
  Vector xty;
  std::size_t n = 0;

  explicit GramSums(std::size_t p) : xtx(p, p), xty(p, 0.0) {}

  GramSums& operator+=(const GramSums& other);
  GramSums& operator-=(const GramSums& other);
};

GramSums gram_sums(const Dataset& d);
GramSums gram_sums(const Dataset& d, std::span<const std::size_t> rows);

/// Normalized moments: sigma = X^T X / n, m = X^T y / n.
struct SufficientStats {
  Matrix sigma;
  Vector m;
  std::size_t n = 0;

  std::size_t p() const noexcept { return m.size(); }
};

/// Throws EmptyDataset when n = 0.
SufficientStats to_stats(const GramSums& sums);
SufficientStats compute_stats(const Dataset& d);

/// Stats of the pooled rows of the two inputs.
SufficientStats pool_stats(const SufficientStats& a, const SufficientStats& b);

struct PretrainedModel {
  Vector theta;
  std::size_t n_total = 0;
  std::size_t n_remaining = 0;
  std::size_t n_forget = 0;
  LossId loss = LossId::squared;

  std::size_t p() const noexcept { return theta.size(); }

  /// Throws InvalidArgument unless N = N_r + N_f, N_r >= 1, theta finite.
  void validate() const;
};

struct WeightProfile {
  double omega_f;        // N_f / N
  double omega_r;        // N_r / N
  double tilde_omega_r;  // n_sub / N_r

  WeightProfile(const PretrainedModel& model, std::size_t n_sub);
};

/// Uniform draw of n_sub rows without replacement (partial Fisher-Yates).
Dataset subsample(const Dataset& d, std::size_t n_sub, RngStream& rng);

/// (train, test) with round(n * test_fraction) rows on the test side.
std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double test_fraction,
                                             RngStream& rng);

struct CsvSchema {
  Role role = Role::remaining;
  std::optional<std::size_t> p;  // required covariate count, if known
};

/// Header `y,x1,...,xp`, comma separated decimal literals, no quoting.
Dataset read_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<stream>");
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes with 17 significant digits.
void write_csv(std::ostream& out, const Dataset& d);
void save_csv(const Dataset& d, const std::filesystem::path& path);

/// %.17g rendering used by every CSV writer.
std::string format_double(double v);

}  // namespace unlearn
