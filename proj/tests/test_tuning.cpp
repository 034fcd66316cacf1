#include <doctest.h>

#include <cmath>
#include <limits>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "unlearn/error.hpp"
#include "unlearn/tuning.hpp"

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

}  // namespace

TEST_CASE("log_grid examples") {
  const auto g = log_grid(1, 100, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(g[2] == 100.0);

  const auto h = log_grid(1e-4, 1e4, 20);
  REQUIRE(h.size() == 20);
  CHECK(h.front() == 1e-4);
  CHECK(h.back() == 1e4);
  for (std::size_t i = 2; i < h.size(); ++i) {
    CHECK(h[i] / h[i - 1] == doctest::Approx(h[1] / h[0]).epsilon(1e-12));
  }
  CHECK(log_grid(0.5, 2.0, 2) == std::vector<double>{0.5, 2.0});

  CHECK(kind_of([] { log_grid(0, 1, 3); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { log_grid(2, 1, 3); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { log_grid(1, 2, 1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("cv spec validation") {
  CvSpec s;
  CHECK(s.folds == 5);
  CHECK(s.grid.size() == 20);
  CHECK_NOTHROW(s.validate());
  s.folds = 1;
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::InvalidArgument);
  s.folds = 3;
  s.grid = {1.0, 1.0};
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::InvalidArgument);
  s.grid = {};
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::InvalidArgument);
  s.grid = {-1.0, 1.0};
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("single-candidate grid returns that candidate") {
  const gen::Instance in = gen::instance(1, 3, 400, 40, 120, 2.0);
  RngStream rng(1, 3);
  const CvResult r = cv_select(TunedMethod::transfer_ridge, in.model, in.forget, in.sub,
                               CvSpec{4, {0.25}}, rng);
  CHECK(r.lambda == 0.25);
  CHECK(r.table.size() == 4);
  double mean = 0.0;
  for (const auto& e : r.table) mean += e.mse / 4.0;
  CHECK(r.score == doctest::Approx(mean));
}

TEST_CASE("graddiff with an all-indefinite grid has no feasible lambda") {
  const gen::Instance in = gen::instance(2, 3, 400, 40, 120, 2.0);
  RngStream rng(2, 3);
  CHECK(kind_of([&] {
          cv_select(TunedMethod::graddiff, in.model, in.forget, in.sub, CvSpec{5, {1e-6, 1e-5, 1e-4}}, rng);
        }) == ErrorKind::NoFeasibleLambda);
}

TEST_CASE("graddiff CV skips indefinite candidates and verifies the pick on the full subsample") {
  const gen::Instance in = gen::instance(3, 4, 2000, 200, 300, 2.0);
  RngStream rng(3, 3);
  const CvResult r = cv_select(TunedMethod::graddiff, in.model, in.forget, in.sub, CvSpec{}, rng);
  CHECK(std::isinf(r.table.front().mse));
  const SufficientStats s = compute_stats(in.sub), f = compute_stats(in.forget);
  CHECK_NOTHROW(cholesky(linear_combination(r.lambda, s.sigma, -1.0, f.sigma)));
}

TEST_CASE("cv table matches refits on explicit folds") {
  const gen::Instance in = gen::instance(4, 3, 1000, 100, 100, 3.0);
  RngStream rng(4, 3);
  const CvSpec spec{5, log_grid(1e-2, 1e2, 5)};
  const CvResult r = cv_select(TunedMethod::uls_plus, in.model, in.forget, in.sub, spec, rng);
  REQUIRE(r.table.size() == 25);
  REQUIRE(r.fold_of.size() == in.sub.n());
  for (const auto& e : r.table) {
    std::vector<std::size_t> train, held;
    for (std::size_t i = 0; i < in.sub.n(); ++i) (r.fold_of[i] == e.fold ? held : train).push_back(i);
    CHECK(held.size() == 20);
    const Dataset tr = select_rows(in.sub, train, Role::subsample);
    const Dataset te = select_rows(in.sub, held, Role::test);
    const Vector theta = uls_plus(in.model, in.forget, tr, e.lambda).theta;
    CHECK(e.mse == doctest::Approx(oracle::sq_loss(theta, te) / te.n()).epsilon(1e-9));
  }
  for (double s : r.mean_score) CHECK(r.score <= s);
}

TEST_CASE("cv is deterministic for a fixed stream") {
  const gen::Instance in = gen::instance(5, 3, 1000, 100, 150, 2.0);
  RngStream a(9, 3), b(9, 3);
  const CvResult x = cv_select(TunedMethod::transfer_ridge, in.model, in.forget, in.sub, CvSpec{}, a);
  const CvResult y = cv_select(TunedMethod::transfer_ridge, in.model, in.forget, in.sub, CvSpec{}, b);
  CHECK(x.lambda == y.lambda);
  CHECK(x.fold_of == y.fold_of);
  for (std::size_t i = 0; i < x.table.size(); ++i) CHECK(x.table[i].mse == y.table[i].mse);
}

TEST_CASE("ties go to the larger lambda") {
  // With no forget rows every ULS+ fit is theta_p, so all scores tie.
  const gen::Instance in = gen::instance(6, 2, 300, 0, 100);
  const Dataset none(Matrix(0, 2), Vector{}, Role::forget);
  RngStream rng(6, 3);
  const CvResult r = cv_select(TunedMethod::uls_plus, in.model, none, in.sub, CvSpec{5, {0.1, 1, 10}}, rng);
  CHECK(r.lambda == 10.0);
}

TEST_CASE("large forget bias favours a nonzero ULS+ weight") {
  const gen::Instance in = gen::instance(7, 5, 4000, 1000, 400, 12.0);
  RngStream rng(7, 3);
  const CvSpec spec{5, {1e-8, 1e-2, 1e-1, 1, 10}};
  const CvResult r = cv_select(TunedMethod::uls_plus, in.model, in.forget, in.sub, spec, rng);
  CHECK(r.lambda > 1e-8);
  CHECK(r.mean_score[0] > r.score);
}

TEST_CASE("cv needs enough rows per fold") {
  const gen::Instance in = gen::instance(8, 5, 200, 10, 29);
  RngStream rng(8, 3);
  CHECK(kind_of([&] {
          cv_select(TunedMethod::transfer_ridge, in.model, in.forget, in.sub, CvSpec{}, rng);
        }) == ErrorKind::InsufficientData);
}

TEST_CASE("plug-in ULS+ lambda") {
  const gen::Instance in = gen::instance(9, 3, 500, 50, 100, 2.0);
  const double want = (500.0 / 550.0) * (50.0 / 550.0) *
                      oracle::norm(subtract(oracle::ols(in.sub), oracle::ols(in.forget)));
  CHECK(plugin_uls_plus_lambda(in.model, in.forget, in.sub) == doctest::Approx(want));
  const Dataset none(Matrix(0, 3), Vector{}, Role::forget);
  CHECK(kind_of([&] { plugin_uls_plus_lambda(in.model, none, in.sub); }) == ErrorKind::InsufficientData);
}
