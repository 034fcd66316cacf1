#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "support/generators.hpp"
#include "unlearn/data.hpp"
#include "unlearn/error.hpp"

using namespace unlearn;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an unlearn::Error");
  return ErrorKind::InvalidArgument;
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Dataset from_text(const std::string& text, Role role = Role::remaining) {
  std::istringstream in(text);
  return read_csv(in, CsvSchema{role, std::nullopt}, "t.csv");
}

std::vector<Vector> rows_of(const Dataset& d) {
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < d.n(); ++i) {
    Vector r(d.x().row(i).begin(), d.x().row(i).end());
    r.push_back(d.y()[i]);
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

TEST_CASE("dataset invariants") {
  CHECK(kind_of([] { Dataset(Matrix(2, 1), Vector{1}, Role::remaining); }) ==
        ErrorKind::DimensionMismatch);
  CHECK(kind_of([] { Dataset(Matrix(0, 2), Vector{}, Role::remaining); }) ==
        ErrorKind::EmptyDataset);
  CHECK_NOTHROW(Dataset(Matrix(0, 2), Vector{}, Role::forget));
  CHECK(kind_of([] { Dataset(Matrix(1, 0), Vector{1}, Role::remaining); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("compute_stats examples") {
  const SufficientStats a = compute_stats(Dataset(Matrix(1, 2, {1, 0}), Vector{2}, Role::remaining));
  CHECK(a.sigma == Matrix(2, 2, {1, 0, 0, 0}));
  CHECK(a.m == Vector{2, 0});
  CHECK(a.n == 1);

  const SufficientStats b = compute_stats(Dataset(Matrix(2, 1, {1, 1}), Vector{1, 3}, Role::remaining));
  CHECK(b.sigma(0, 0) == 1.0);
  CHECK(b.m[0] == 2.0);

  RngStream rng(4, 4);
  const Dataset d = gen::linear_data(rng, 13, 3, Vector{1, 2, 3}, Role::remaining);
  const SufficientStats once = compute_stats(d);
  const SufficientStats twice = compute_stats(concat(d, d, Role::remaining));
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(twice.sigma.entries()[i] == doctest::Approx(once.sigma.entries()[i]).epsilon(1e-14));
  }
  for (std::size_t j = 0; j < 3; ++j) CHECK(twice.m[j] == doctest::Approx(once.m[j]).epsilon(1e-14));

  CHECK(kind_of([] { compute_stats(Dataset(Matrix(0, 2), Vector{}, Role::forget)); }) ==
        ErrorKind::EmptyDataset);
}

TEST_CASE("property: stats are invariant to row permutation") {
  RngStream rng(8, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(200), p = 1 + rng.uniform_index(9);
    const Dataset d = gen::linear_data(rng, n, p, gen::normal_vector(rng, p), Role::remaining);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    const SufficientStats a = compute_stats(d);
    const SufficientStats b = compute_stats(select_rows(d, perm, Role::remaining));
    for (std::size_t i = 0; i < p * p; ++i) {
      CHECK(std::abs(a.sigma.entries()[i] - b.sigma.entries()[i]) <=
            1e-12 * (1.0 + std::abs(a.sigma.entries()[i])));
    }
    for (std::size_t j = 0; j < p; ++j) CHECK(std::abs(a.m[j] - b.m[j]) <= 1e-12 * (1.0 + std::abs(a.m[j])));
    CHECK(a.sigma(0, p - 1) == a.sigma(p - 1, 0));
  }
}

TEST_CASE("pool_stats equals stats of the concatenation") {
  RngStream rng(1, 5);
  const Dataset a = gen::linear_data(rng, 30, 4, Vector{1, 0, 0, 1}, Role::remaining);
  const Dataset b = gen::linear_data(rng, 7, 4, Vector{0, 1, 1, 0}, Role::forget);
  const SufficientStats pooled = pool_stats(compute_stats(a), compute_stats(b));
  const SufficientStats direct = compute_stats(concat(a, b, Role::remaining));
  CHECK(pooled.n == 37);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(pooled.sigma.entries()[i] == doctest::Approx(direct.sigma.entries()[i]).epsilon(1e-13));
  }
}

TEST_CASE("gram sums over row subsets subtract cleanly") {
  RngStream rng(6, 6);
  const Dataset d = gen::linear_data(rng, 150, 5, Vector(5, 1.0), Role::subsample);
  std::vector<std::size_t> odd, even;
  for (std::size_t i = 0; i < d.n(); ++i) (i % 2 ? odd : even).push_back(i);
  GramSums rest = gram_sums(d);
  rest -= gram_sums(d, odd);
  const GramSums e = gram_sums(d, even);
  CHECK(rest.n == e.n);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(rest.xty[j] == doctest::Approx(e.xty[j]).epsilon(1e-11));
    for (std::size_t k = j; k < 5; ++k) CHECK(rest.xtx(j, k) == doctest::Approx(e.xtx(j, k)).epsilon(1e-11));
  }
}

TEST_CASE("subsample: full size is a permutation") {
  RngStream rng(2, 2);
  const Dataset d = gen::linear_data(rng, 25, 2, Vector{1, -1}, Role::remaining);
  RngStream pick(3, 3);
  const Dataset s = subsample(d, 25, pick);
  CHECK(s.role() == Role::subsample);
  CHECK(rows_of(s) == rows_of(d));
}

TEST_CASE("subsample: single row is reproducible and uniform") {
  const Dataset d(Matrix(4, 1, {0, 1, 2, 3}), Vector{0, 1, 2, 3}, Role::remaining);
  RngStream a(17, 1), b(17, 1);
  CHECK(subsample(d, 1, a).y() == subsample(d, 1, b).y());

  RngStream r(5, 0);
  std::map<double, int> freq;
  const int reps = 10000;
  for (int i = 0; i < reps; ++i) ++freq[subsample(d, 1, r).y()[0]];
  for (const auto& [row, count] : freq) CHECK(std::abs(count / double(reps) - 0.25) < 0.02);
  CHECK(freq.size() == 4);
}

TEST_CASE("property: subsample rows form a sub-multiset without repeats") {
  RngStream rng(3, 9);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng.uniform_index(60);
    Matrix x(n, 1);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) = y[i] = static_cast<double>(i);
    const Dataset d(x, y, Role::remaining);
    const std::size_t k = 1 + rng.uniform_index(n);
    Vector got = subsample(d, k, rng).y();
    std::sort(got.begin(), got.end());
    CHECK(std::adjacent_find(got.begin(), got.end()) == got.end());
    CHECK(got.front() >= 0.0);
    CHECK(got.back() < static_cast<double>(n));
  }
  RngStream r(1, 1);
  const Dataset d(Matrix(3, 1), Vector(3, 0.0), Role::remaining);
  CHECK(kind_of([&] { subsample(d, 4, r); }) == ErrorKind::SubsampleTooLarge);
}

TEST_CASE("split_train_test sizes and partition") {
  Matrix x(10, 1);
  Vector y(10);
  for (int i = 0; i < 10; ++i) x(i, 0) = y[i] = i;
  const Dataset d(x, y, Role::remaining);
  RngStream a(4, 2), b(4, 2);
  const auto [train, test] = split_train_test(d, 0.2, a);
  CHECK(train.n() == 8);
  CHECK(test.n() == 2);
  CHECK(test.role() == Role::test);
  Vector all = train.y();
  all.insert(all.end(), test.y().begin(), test.y().end());
  std::sort(all.begin(), all.end());
  CHECK(all == y);
  const auto again = split_train_test(d, 0.2, b);
  CHECK(again.second.y() == test.y());
}

TEST_CASE("weight profile") {
  PretrainedModel m{Vector{1.0}, 1000, 950, 50, LossId::squared};
  const WeightProfile w(m, 190);
  CHECK(w.omega_f + w.omega_r == 1.0);
  CHECK(w.omega_f == doctest::Approx(0.05));
  CHECK(w.tilde_omega_r == doctest::Approx(0.2));
  m.n_total = 999;
  CHECK(kind_of([&] { m.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("csv: reads the two-row example") {
  const Dataset d = from_text("y,x1\n1.0,2.0\n3.0,4.0\n");
  CHECK(d.n() == 2);
  CHECK(d.p() == 1);
  CHECK(d.y() == Vector{1.0, 3.0});
  CHECK(d.x()(1, 0) == 4.0);
}

TEST_CASE("csv: header-only file gives an empty forget set") {
  const Dataset d = from_text("y,x1,x2\n", Role::forget);
  CHECK(d.empty());
  CHECK(d.p() == 2);
}

TEST_CASE("csv: errors carry their location") {
  CHECK(kind_of([] { from_text("y,x1\n1.0,NaN\n"); }) == ErrorKind::ParseError);
  const std::string msg = error_text([] { from_text("y,x1\n1.0,2.0\n1.0,NaN\n"); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("column x1") != std::string::npos);
  CHECK(kind_of([] { from_text("y,x1\n1.0,abc\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { from_text("y,x1\n1.0\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { from_text("y,z1\n1.0,2.0\n"); }) == ErrorKind::SchemaMismatch);
  CHECK(kind_of([] { from_text(""); }) == ErrorKind::SchemaMismatch);
  std::istringstream in("y,x1\n1,2\n");
  CHECK(kind_of([&] { read_csv(in, CsvSchema{Role::remaining, 2}, "t"); }) == ErrorKind::SchemaMismatch);
}

TEST_CASE("csv: round trip of a random 100x5 dataset") {
  RngStream rng(21, 0);
  const Dataset d = gen::linear_data(rng, 100, 5, gen::normal_vector(rng, 5), Role::remaining);
  const auto path = std::filesystem::temp_directory_path() / "unlearn_roundtrip.csv";
  save_csv(d, path);
  const Dataset back = load_csv(path, CsvSchema{Role::remaining, 5});
  std::filesystem::remove(path);
  CHECK(back.x() == d.x());
  CHECK(back.y() == d.y());
  CHECK(kind_of([] { load_csv("/nonexistent/dir/file.csv", CsvSchema{}); }) == ErrorKind::IoError);
}
