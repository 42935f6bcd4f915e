#include <doctest.h>

#include <cmath>

#include "hhme/model.hpp"
#include "hhme/reproduce.hpp"
#include "test_util.hpp"

using namespace hhme;
using testing::throws_naming;

TEST_CASE("validate accepts the reference parameters and attaches R") {
  const ValidatedParameterSet v =
      validate(reproduce::reference_parameters_with_assumptions());
  CHECK(v.R() == doctest::Approx(0.558970795144486).epsilon(1e-12));
  // the published table prints the truncated 0.5589; to 4 s.f. R is 0.5590
  CHECK(std::abs(v.R() - 0.5590) < 5e-5);
  CHECK(v.R() == v.mu_y() / v.mu_x());
}

TEST_CASE("validate accepts the degenerate pure-SRS design") {
  ParameterSet p;
  p.n = 30;
  p.W2 = 0.0;
  p.k = 1.0;
  p.mu_y = 10.0;
  p.mu_x = 5.0;
  p.S_y = 2.0;
  p.S_x = 1.0;
  p.rho = 0.5;
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("validate reports the first violated invariant by name") {
  ParameterSet base;
  base.n = 30;
  base.mu_y = 10.0;
  base.mu_x = 5.0;
  base.S_y = 2.0;
  base.S_x = 1.0;
  base.rho = 0.5;
  base.k = 2.0;
  base.W2 = 0.25;

  auto with = [&](auto&& tweak) {
    ParameterSet p = base;
    tweak(p);
    return [p] { validate(p); };
  };

  CHECK(throws_naming(with([](ParameterSet& p) { p.rho = 1.2; }),
                      "rho out of range"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.n = 1; }), "n must be >= 2"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.S_y = 0.0; }), "S_y"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.mu_x = 0.0; }),
                      "mu_x must be nonzero"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.N = 10; }), "N must be >= n"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.N = 101; }), "W2 * N"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.k = 0.5; }), "k must be >= 1"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.errors.sigma_v2_sq = -1.0; }),
                      "sigma_v2_sq"));
  CHECK(throws_naming(with([](ParameterSet& p) { p.rho2 = -1.01; }),
                      "rho2 out of range"));
}

TEST_CASE("TOML round-trip reproduces every field bit-exactly") {
  auto g = rng::child_rng(20250811, rng::Stream::misc, 0);
  for (int i = 0; i < 200; ++i) {
    ParameterSet p = testing::random_params(g);
    if (i % 3 == 0) {
      p.N = p.n * (100 + static_cast<std::int64_t>(rng::bounded(g, 100)));
      p.W2 = static_cast<double>(rng::bounded(g, static_cast<std::uint64_t>(*p.N / 2))) /
             static_cast<double>(*p.N);
    }
    if (i % 5 == 0) {
      p.mu_y2.reset();
      p.mu_x2.reset();
    }
    const ParameterSet q = parse_params(to_toml(p));
    CHECK(q.n == p.n);
    CHECK(q.N == p.N);
    CHECK(q.W2 == p.W2);
    CHECK(q.k == p.k);
    CHECK(q.mu_y == p.mu_y);
    CHECK(q.mu_x == p.mu_x);
    CHECK(q.S_y == p.S_y);
    CHECK(q.S_x == p.S_x);
    CHECK(q.rho == p.rho);
    CHECK(q.S_y2 == p.S_y2);
    CHECK(q.S_x2 == p.S_x2);
    CHECK(q.rho2 == p.rho2);
    CHECK(q.mu_y2 == p.mu_y2);
    CHECK(q.mu_x2 == p.mu_x2);
    CHECK(q.errors.sigma_u_sq == p.errors.sigma_u_sq);
    CHECK(q.errors.sigma_v_sq == p.errors.sigma_v_sq);
    CHECK(q.errors.sigma_u2_sq == p.errors.sigma_u2_sq);
    CHECK(q.errors.sigma_v2_sq == p.errors.sigma_v2_sq);
  }
}

TEST_CASE("config parser tolerates comments and reports bad input") {
  CHECK_NOTHROW(parse_params(
      "# design\nn = 70\nW2 = 0.25 # weight\nk = 2\nmu_y = 981.29\n"
      "mu_x = 1755.53\nS_y = 613.66\nS_x = 1406.13\nrho = 0.778\n"));
  CHECK(throws_naming([] { parse_params("n = 70\nW2 = abc\n"); }, "'W2'"));
  CHECK(throws_naming([] { parse_params("n = 70\nbogus = 1\n"); },
                      "unknown key 'bogus'"));
  CHECK(throws_naming([] { parse_params("W2 = 0.25\nk = 2\n"); }, "'n'"));
  CHECK(throws_naming([] { parse_params("n = 70\nno equals sign here\n"); },
                      "key = value"));
}

TEST_CASE("finite population bookkeeping") {
  FinitePopulation pop;
  pop.x_true = {0.0, 1.0, 2.0, 3.0};
  pop.y_true = {0.0, 1.0, 2.0, 3.0};
  pop.stratum = {1, 1, 2, 2};
  pop.N1 = 2;
  pop.N2 = 2;
  CHECK_NOTHROW(pop.check());
  CHECK(pop.W1() == 0.5);
  CHECK(pop.stratum_ybar(1) == 0.5);
  CHECK(pop.stratum_ybar(2) == 2.5);

  pop.N1 = 3;
  pop.N2 = 1;
  CHECK_THROWS_AS(pop.check(), ValidationError);
}
