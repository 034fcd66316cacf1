#include "unlearn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string_view>

#include "unlearn/error.hpp"
#include "unlearn/simd.hpp"

namespace unlearn {

std::string_view to_string(LossId id) noexcept {
  return id == LossId::squared ? "squared" : "logistic";
}

LossId parse_loss_id(std::string_view text) {
  if (text == "squared") return LossId::squared;
  if (text == "logistic") return LossId::logistic;
  throw Error(ErrorKind::InvalidArgument, "unknown loss '" + std::string(text) + "'");
}

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::remaining: return "remaining";
    case Role::forget: return "forget";
    case Role::subsample: return "subsample";
    case Role::test: return "test";
  }
  return "unknown";
}

Dataset::Dataset(Matrix x, Vector y, Role role) : x_(std::move(x)), y_(std::move(y)), role_(role) {
  if (x_.rows() != y_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "dataset has " + std::to_string(x_.rows()) +
                                                  " covariate rows but " +
                                                  std::to_string(y_.size()) + " responses");
  }
  if (x_.cols() == 0) throw Error(ErrorKind::InvalidArgument, "dataset needs p >= 1");
  if (x_.rows() == 0 && role_ != Role::forget) {
    throw Error(ErrorKind::EmptyDataset,
                "only a forget set may be empty (role " + std::string(to_string(role_)) + ")");
  }
}

Dataset Dataset::with_role(Role role) const { return Dataset(x_, y_, role); }

Dataset concat(const Dataset& a, const Dataset& b, Role role) {
  if (a.p() != b.p()) {
    throw Error(ErrorKind::DimensionMismatch, "concat of datasets with different p");
  }
  Matrix x = a.x();
  x.append_rows(b.x());
  Vector y = a.y();
  y.insert(y.end(), b.y().begin(), b.y().end());
  return Dataset(std::move(x), std::move(y), role);
}

Dataset select_rows(const Dataset& d, std::span<const std::size_t> rows, Role role) {
  const std::size_t p = d.p();
  std::vector<double> xs;
  xs.reserve(rows.size() * p);
  Vector y;
  y.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= d.n()) throw Error(ErrorKind::InvalidArgument, "row index out of range");
    auto src = d.x().row(r);
    xs.insert(xs.end(), src.begin(), src.end());
    y.push_back(d.y()[r]);
  }
  return Dataset(Matrix(rows.size(), p, std::move(xs)), std::move(y), role);
}

GramSums& GramSums::operator+=(const GramSums& other) {
  auto a = xtx.entries();
  auto b = other.xtx.entries();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  for (std::size_t i = 0; i < xty.size(); ++i) xty[i] += other.xty[i];
  n += other.n;
  return *this;
}

GramSums& GramSums::operator-=(const GramSums& other) {
  auto a = xtx.entries();
  auto b = other.xtx.entries();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  for (std::size_t i = 0; i < xty.size(); ++i) xty[i] -= other.xty[i];
  n -= other.n;
  return *this;
}

GramSums gram_sums(const Dataset& d) {
  GramSums s(d.p());
  if (d.n() > 0) {
    simd::active().gram_accumulate(d.x().data(), d.y().data(), d.n(), d.p(), s.xtx.data(),
                                   s.xty.data());
  }
  s.n = d.n();
  return s;
}

GramSums gram_sums(const Dataset& d, std::span<const std::size_t> rows) {
  constexpr std::size_t kBlock = 64;
  const std::size_t p = d.p();
  GramSums s(p);
  std::vector<double> xb(kBlock * p);
  std::vector<double> yb(kBlock);
  const auto& k = simd::active();
  for (std::size_t start = 0; start < rows.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, rows.size() - start);
    for (std::size_t i = 0; i < len; ++i) {
      auto src = d.x().row(rows[start + i]);
      std::copy(src.begin(), src.end(), xb.begin() + static_cast<std::ptrdiff_t>(i * p));
      yb[i] = d.y()[rows[start + i]];
    }
    k.gram_accumulate(xb.data(), yb.data(), len, p, s.xtx.data(), s.xty.data());
  }
  s.n = rows.size();
  return s;
}

SufficientStats to_stats(const GramSums& sums) {
  if (sums.n == 0) throw Error(ErrorKind::EmptyDataset, "sufficient statistics need n >= 1");
  const std::size_t p = sums.xty.size();
  const double inv = 1.0 / static_cast<double>(sums.n);
  SufficientStats st{Matrix(p, p), Vector(p), sums.n};
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j; k < p; ++k) {
      const double v = sums.xtx(j, k) * inv;
      st.sigma(j, k) = v;
      st.sigma(k, j) = v;
    }
    st.m[j] = sums.xty[j] * inv;
  }
  return st;
}

SufficientStats compute_stats(const Dataset& d) {
  if (d.n() == 0) throw Error(ErrorKind::EmptyDataset, "compute_stats on an empty dataset");
  return to_stats(gram_sums(d));
}

SufficientStats pool_stats(const SufficientStats& a, const SufficientStats& b) {
  if (a.p() != b.p()) throw Error(ErrorKind::DimensionMismatch, "pool_stats with different p");
  const double n = static_cast<double>(a.n + b.n);
  const double wa = static_cast<double>(a.n) / n;
  const double wb = static_cast<double>(b.n) / n;
  SufficientStats out{linear_combination(wa, a.sigma, wb, b.sigma), Vector(a.p()), a.n + b.n};
  for (std::size_t j = 0; j < a.p(); ++j) out.m[j] = wa * a.m[j] + wb * b.m[j];
  return out;
}

void PretrainedModel::validate() const {
  if (theta.empty()) throw Error(ErrorKind::InvalidArgument, "model has no coefficients");
  if (!all_finite(theta)) throw Error(ErrorKind::InvalidArgument, "model theta is not finite");
  if (n_total != n_remaining + n_forget) {
    throw Error(ErrorKind::InvalidArgument, "model counts violate N = N_r + N_f");
  }
  if (n_remaining == 0) throw Error(ErrorKind::InvalidArgument, "model needs N_r >= 1");
}

WeightProfile::WeightProfile(const PretrainedModel& model, std::size_t n_sub) {
  model.validate();
  if (n_sub == 0 || n_sub > model.n_remaining) {
    throw Error(ErrorKind::InvalidArgument, "subsample size must lie in [1, N_r]");
  }
  omega_f = static_cast<double>(model.n_forget) / static_cast<double>(model.n_total);
  omega_r = 1.0 - omega_f;
  tilde_omega_r = static_cast<double>(n_sub) / static_cast<double>(model.n_remaining);
}

Dataset subsample(const Dataset& d, std::size_t n_sub, RngStream& rng) {
  if (n_sub == 0) throw Error(ErrorKind::InvalidArgument, "subsample size must be >= 1");
  if (n_sub > d.n()) {
    throw Error(ErrorKind::SubsampleTooLarge, "requested " + std::to_string(n_sub) +
                                                  " rows from " + std::to_string(d.n()));
  }
  std::vector<std::size_t> idx(d.n());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_sub; ++i) {
    const std::size_t j = i + rng.uniform_index(d.n() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n_sub);
  return select_rows(d, idx, Role::subsample);
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double test_fraction,
                                             RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "test_fraction must lie in (0, 1)");
  }
  const auto n_test = static_cast<std::size_t>(std::llround(d.n() * test_fraction));
  if (n_test == 0 || n_test >= d.n()) {
    throw Error(ErrorKind::InsufficientData, "split leaves one side empty");
  }
  std::vector<std::size_t> idx(d.n());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = d.n(); i-- > 1;) {
    std::swap(idx[i], idx[rng.uniform_index(i + 1)]);
  }
  std::span<const std::size_t> all(idx);
  return {select_rows(d, all.subspan(n_test), Role::remaining),
          select_rows(d, all.first(n_test), Role::test)};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::SchemaMismatch, source + ": missing header line");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "y") {
    throw Error(ErrorKind::SchemaMismatch, source + ": header must be y,x1,...,xp");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j)) {
      throw Error(ErrorKind::SchemaMismatch, source + ": header field " + std::to_string(j + 1) +
                                                 " is '" + std::string(header[j]) +
                                                 "', expected 'x" + std::to_string(j) + "'");
    }
  }
  const std::size_t p = header.size() - 1;
  if (schema.p && *schema.p != p) {
    throw Error(ErrorKind::SchemaMismatch, source + ": expected " + std::to_string(*schema.p) +
                                               " covariates, header has " + std::to_string(p));
  }

  std::vector<double> xs;
  Vector y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != p + 1) {
      throw Error(ErrorKind::ParseError, source + ": line " + std::to_string(line_no) + " has " +
                                             std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(p + 1));
    }
    for (std::size_t j = 0; j <= p; ++j) {
      std::string_view f = fields[j];
      if (f.size() > 1 && f.front() == '+') f.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      const std::string cell = j == 0 ? std::string("y") : "x" + std::to_string(j);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
        throw Error(ErrorKind::ParseError, source + ": line " + std::to_string(line_no) +
                                               ", column " + cell + ": cannot parse '" +
                                               std::string(f) + "'");
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::ParseError, source + ": line " + std::to_string(line_no) +
                                               ", column " + cell + ": non-finite value '" +
                                               std::string(f) + "'");
      }
      if (j == 0) {
        y.push_back(v);
      } else {
        xs.push_back(v);
      }
    }
  }
  const std::size_t n = y.size();
  if (n == 0 && schema.role != Role::forget) {
    throw Error(ErrorKind::EmptyDataset, source + ": no data rows");
  }
  return Dataset(Matrix(n, p, std::move(xs)), std::move(y), schema.role);
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_csv(in, schema, path.string());
}

std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_csv(std::ostream& out, const Dataset& d) {
  out << 'y';
  for (std::size_t j = 1; j <= d.p(); ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t i = 0; i < d.n(); ++i) {
    out << format_double(d.y()[i]);
    for (double v : d.x().row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_csv(out, d);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace unlearn
