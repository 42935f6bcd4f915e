#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "hhme/model.hpp"
#include "hhme/reproduce.hpp"
#include "hhme/theory.hpp"
#include "test_util.hpp"

using namespace hhme;
namespace th = hhme::theory;

namespace {

ValidatedParameterSet reference(double k) {
  ParameterSet p = reproduce::reference_parameters_with_assumptions();
  p.k = k;
  return validate(p);
}

ParameterSet srs_base() {
  ParameterSet p;
  p.n = 100;
  p.W2 = 0.0;
  p.k = 1.0;
  p.mu_y = 10.0;
  p.mu_x = 5.0;
  p.S_y = 2.0;
  p.S_x = 1.0;
  p.rho = 0.6;
  return p;
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("derive_moments: k = 1 kills the non-response term") {
  ParameterSet p = srs_base();
  p.W2 = 0.4;
  p.k = 1.0;
  p.errors.sigma_u_sq = 3.0;
  const DerivedMoments m = th::derive_moments(validate(p));
  CHECK(m.A == 0.0);
  CHECK(m.M == doctest::Approx((p.S_y * p.S_y + 3.0) / 100.0).epsilon(1e-15));
}

TEST_CASE("derive_moments: direct substitution of A") {
  const DerivedMoments m = th::derive_moments(reference(3.0));
  CHECK(m.A == doctest::Approx(1.0 / 140.0).epsilon(1e-15));
}

// Regression constants fixed ahead of the implementation by an independent
// single-line arithmetic evaluation of the three formulas (k = 3 variant of
// the reference design).
TEST_CASE("derive_moments: frozen reference constants at k = 3") {
  const DerivedMoments m = th::derive_moments(reference(3.0));
  CHECK(m.M == doctest::Approx(5806.10630928571).epsilon(1e-12));
  CHECK(m.Nq == doctest::Approx(31095.1145278571).epsilon(1e-12));
  CHECK(m.O == doctest::Approx(10080.3605222807).epsilon(1e-12));
  CHECK(m.R == doctest::Approx(0.558970795144486).epsilon(1e-12));
}

TEST_CASE("derive_moments: e-moment identities on random parameter sets") {
  auto g = rng::child_rng(11, rng::Stream::misc, 1);
  for (int i = 0; i < 100; ++i) {
    const ValidatedParameterSet v = validate(testing::random_params(g));
    const DerivedMoments m = th::derive_moments(v);
    const double y2 = v.mu_y() * v.mu_y();
    CHECK(close_rel(y2 * m.Ee0sq, m.M, 1e-12));
    CHECK(close_rel(y2 * m.Ee1sq, m.R * m.R * m.Nq, 1e-12));
    CHECK(close_rel(y2 * m.Ee0e1, m.R * m.O, 1e-12));
    CHECK(m.C_y == v.S_y() / v.mu_y());
    CHECK(m.C_x2 == v.S_x2() / v.mu_x());
  }
}

TEST_CASE("derive_moments: zero stratum-2 SD keeps the error term (limit form)") {
  ParameterSet p = srs_base();
  p.W2 = 0.25;
  p.k = 3.0;
  p.S_y2 = 0.0;
  p.errors.sigma_u2_sq = 9.0;
  const DerivedMoments m = th::derive_moments(validate(p));
  const double A = 2.0 * 0.25 / 100.0;
  CHECK(m.M == doctest::Approx(p.S_y * p.S_y / 100.0 + A * 9.0).epsilon(1e-15));
}

TEST_CASE("mse_t1: reductions and closed-form decomposition parts") {
  SUBCASE("pure SRS reduction") {
    const MseDecomposition d = th::mse_t1(validate(srs_base()));
    CHECK(d.total == doctest::Approx(4.0 / 100.0).epsilon(1e-15));
    CHECK(d.me_contribution == 0.0);
    CHECK(d.nr_contribution == 0.0);
  }
  SUBCASE("unit-variance design gives 0.02") {
    ParameterSet p = srs_base();
    p.S_y = 1.0;
    p.errors.sigma_u_sq = 1.0;
    CHECK(th::mse_t1(validate(p)).total == doctest::Approx(0.02).epsilon(1e-15));
  }
  SUBCASE("parts match their closed forms on random sets") {
    auto g = rng::child_rng(12, rng::Stream::misc, 2);
    for (int i = 0; i < 100; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      const ParameterSet& p = v.params();
      const double n = static_cast<double>(p.n);
      const double A = (p.k - 1.0) * p.W2 / n;
      const MseDecomposition d = th::mse_t1(v);
      CHECK(close_rel(d.me_contribution,
                      p.errors.sigma_u_sq / n + A * p.errors.sigma_u2_sq, 1e-9));
      CHECK(close_rel(d.nr_contribution, A * p.S_y2 * p.S_y2, 1e-9));
      CHECK(close_rel(d.srs_base(), p.S_y * p.S_y / n, 1e-9));
      // additivity identity of the decomposition
      CHECK(close_rel(d.total,
                      d.srs_base() + d.nr_contribution + d.me_contribution, 1e-9));
    }
  }
}

TEST_CASE("bias_tr: cancellation, SRS value, frozen constant") {
  SUBCASE("O = R*Nq makes the bias vanish") {
    ParameterSet p = srs_base();
    p.mu_y = 1.0;
    p.mu_x = 2.0;  // R = 0.5
    p.S_x = 1.0;
    p.S_y = 1.0;
    p.rho = 0.5;  // O = rho/n = R*Nq = 0.5/n
    CHECK(std::abs(th::bias_tr(validate(p))) < 1e-15);
  }
  SUBCASE("classical SRS ratio bias 1/n") {
    ParameterSet p = srs_base();
    p.mu_y = 1.0;
    p.mu_x = 1.0;
    p.S_x = 1.0;
    p.S_y = 1.0;
    p.rho = 0.0;
    CHECK(th::bias_tr(validate(p)) == doctest::Approx(0.01).epsilon(1e-15));
  }
  SUBCASE("frozen reference constant at k = 3") {
    CHECK(th::bias_tr(reference(3.0)) ==
          doctest::Approx(4.15880125686514).epsilon(1e-12));
  }
}

TEST_CASE("mse_tr: class membership and reductions") {
  auto g = rng::child_rng(13, rng::Stream::misc, 3);
  SUBCASE("t_r is the m2 = 1 member") {
    for (int i = 0; i < 100; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      CHECK(close_rel(th::mse_tr(v).total, th::mse_tp(v, 1.0), 1e-12));
    }
  }
  SUBCASE("classical ratio MSE at W2 = 0, no errors") {
    const ValidatedParameterSet v = validate(srs_base());
    const double R = v.R();
    const double expected =
        (4.0 + R * R * 1.0 - 2.0 * R * 0.6 * 1.0 * 2.0) / 100.0;
    CHECK(th::mse_tr(v).total == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("regression estimator: slope, minimum, reductions") {
  SUBCASE("no errors, W2 = 0 gives the classical slope") {
    const ValidatedParameterSet v = validate(srs_base());
    CHECK(th::b_opt(v) == doctest::Approx(0.6 * 2.0 / 1.0).epsilon(1e-14));
  }
  SUBCASE("O = 0 gives slope 0") {
    ParameterSet p = srs_base();
    p.rho = 0.0;
    CHECK(th::b_opt(validate(p)) == 0.0);
  }
  SUBCASE("frozen reference constant at k = 3") {
    CHECK(th::b_opt(reference(3.0)) ==
          doctest::Approx(0.324178272868236).epsilon(1e-12));
    CHECK(th::mse_tlr_min(reference(3.0)) ==
          doctest::Approx(2538.27244528361).epsilon(1e-12));
  }
  SUBCASE("b = 0 reduces to t1; optimum attains the minimum") {
    auto g = rng::child_rng(14, rng::Stream::misc, 4);
    for (int i = 0; i < 100; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      CHECK(close_rel(th::mse_tlr(v, 0.0), th::mse_t1(v).total, 1e-12));
      CHECK(close_rel(th::mse_tlr(v, th::b_opt(v)), th::mse_tlr_min(v), 1e-12));
    }
  }
}

TEST_CASE("proposed class: members, optimum, equality with regression") {
  auto g = rng::child_rng(15, rng::Stream::misc, 5);
  SUBCASE("m2 = 0 is t1") {
    for (int i = 0; i < 50; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      CHECK(close_rel(th::mse_tp(v, 0.0), th::mse_t1(v).total, 1e-12));
    }
  }
  SUBCASE("minimum equals the regression minimum on 100 random sets") {
    for (int i = 0; i < 100; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      CHECK(close_rel(th::mse_tp_min(v), th::mse_tlr_min(v), 1e-12));
    }
  }
  SUBCASE("optimal weights sum to one") {
    for (int i = 0; i < 50; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      const th::ClassWeights w = th::m2_opt(v);
      CHECK(w.m1 + w.m2 == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("grid search over mse_tp lands within one step of m2*") {
    for (int i = 0; i < 20; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      const double star = th::m2_opt(v).m2;
      double best_m2 = star - 0.5;
      double best = th::mse_tp(v, best_m2);
      for (int j = 0; j <= 100; ++j) {
        const double m2 = star - 0.5 + 0.01 * j;
        const double val = th::mse_tp(v, m2);
        if (val < best) {
          best = val;
          best_m2 = m2;
        }
      }
      CHECK(std::abs(best_m2 - star) <= 0.01 + 1e-12);
    }
  }
}

TEST_CASE("efficiency gains: nonnegative and consistent with MSE differences") {
  SUBCASE("O = 0 means the auxiliary is useless") {
    ParameterSet p = srs_base();
    p.rho = 0.0;
    const th::EfficiencyReport r = th::efficiency_report(validate(p));
    CHECK(r.gain_vs_t1 == 0.0);
  }
  SUBCASE("O = R*Nq means the ratio estimator is already optimal") {
    ParameterSet p = srs_base();
    p.mu_y = 1.0;
    p.mu_x = 2.0;
    p.S_x = 1.0;
    p.S_y = 1.0;
    p.rho = 0.5;
    const th::EfficiencyReport r = th::efficiency_report(validate(p));
    CHECK(r.gain_vs_tr < 1e-15);
  }
  SUBCASE("1000 random sets") {
    auto g = rng::child_rng(16, rng::Stream::misc, 6);
    for (int i = 0; i < 1000; ++i) {
      const ValidatedParameterSet v = validate(testing::random_params(g));
      const th::EfficiencyReport r = th::efficiency_report(validate(v.params()));
      CHECK(r.gain_vs_t1 >= 0.0);
      CHECK(r.gain_vs_tr >= 0.0);
      // recompute the gains through the two MSE operations independently
      const double g1 = th::mse_t1(v).total - th::mse_tp_min(v);
      const double g2 = th::mse_tr(v).total - th::mse_tp_min(v);
      CHECK(std::abs(r.gain_vs_t1 - g1) <=
            1e-9 * std::max({r.gain_vs_t1, th::mse_t1(v).total, 1.0}));
      CHECK(std::abs(r.gain_vs_tr - g2) <=
            1e-9 * std::max({r.gain_vs_tr, th::mse_tr(v).total, 1.0}));
    }
  }
}

TEST_CASE("variance_hh: census, SRS reduction, frozen constant") {
  SUBCASE("census with k = 1 has zero variance") {
    ParameterSet p = srs_base();
    p.N = 100;
    CHECK(th::variance_hh(validate(p)) == 0.0);
  }
  SUBCASE("W2 = 0 reduces to SRS with fpc") {
    ParameterSet p = srs_base();
    p.N = 1000;
    const double f = 0.1;
    CHECK(th::variance_hh(validate(p)) ==
          doctest::Approx((1.0 - f) * 4.0 / 100.0).epsilon(1e-14));
  }
  SUBCASE("frozen reference constant") {
    ParameterSet p = reproduce::reference_parameters_with_assumptions();
    p.N = 7000;
    p.k = 3.0;
    CHECK(th::variance_hh(validate(p)) ==
          doctest::Approx(5751.53793848571).epsilon(1e-12));
  }
  SUBCASE("infinite N is rejected") {
    CHECK(testing::throws_naming(
        [] { th::variance_hh(validate(srs_base())); }, "finite N"));
  }
}

TEST_CASE("monotone damage: MSEs non-decreasing in every error source") {
  auto g = rng::child_rng(17, rng::Stream::misc, 7);
  const auto all_mses = [](const ValidatedParameterSet& v) {
    return std::array<double, 4>{th::mse_t1(v).total, th::mse_tr(v).total,
                                 th::mse_tlr_min(v), th::mse_tp_min(v)};
  };
  for (int i = 0; i < 60; ++i) {
    const ParameterSet base = testing::random_params(g);
    const auto before = all_mses(validate(base));
    for (int which = 0; which < 6; ++which) {
      ParameterSet bumped = base;
      const double step = 0.05;
      switch (which) {
        case 0: bumped.errors.sigma_u_sq += step; break;
        case 1: bumped.errors.sigma_v_sq += step; break;
        case 2: bumped.errors.sigma_u2_sq += step; break;
        case 3: bumped.errors.sigma_v2_sq += step; break;
        case 4: bumped.k += step; break;
        case 5: bumped.W2 = std::min(1.0, bumped.W2 + step); break;
      }
      const auto after = all_mses(validate(bumped));
      for (int e = 0; e < 4; ++e)
        CHECK(after[e] >= before[e] - 1e-9 * std::max(1.0, std::abs(before[e])));
    }
  }
}

TEST_CASE("scale covariance of the MSE formulas") {
  auto g = rng::child_rng(18, rng::Stream::misc, 8);
  for (int i = 0; i < 50; ++i) {
    const ParameterSet base = testing::random_params(g);
    const ValidatedParameterSet v = validate(base);
    const double c = testing::uniform_in(g, 0.3, 4.0);

    // scaling Y by c multiplies every MSE by c^2
    ParameterSet ys = base;
    ys.mu_y *= c;
    ys.S_y *= c;
    ys.S_y2 *= c;
    if (ys.mu_y2) *ys.mu_y2 *= c;
    ys.errors.sigma_u_sq *= c * c;
    ys.errors.sigma_u2_sq *= c * c;
    const ValidatedParameterSet vy = validate(ys);
    CHECK(close_rel(th::mse_t1(vy).total, c * c * th::mse_t1(v).total, 1e-10));
    CHECK(close_rel(th::mse_tr(vy).total, c * c * th::mse_tr(v).total, 1e-10));
    CHECK(close_rel(th::mse_tp_min(vy), c * c * th::mse_tp_min(v), 1e-10));

    // scaling X by c leaves every MSE invariant, divides b* by c,
    // and leaves m2* unchanged
    ParameterSet xs = base;
    xs.mu_x *= c;
    xs.S_x *= c;
    xs.S_x2 *= c;
    if (xs.mu_x2) *xs.mu_x2 *= c;
    xs.errors.sigma_v_sq *= c * c;
    xs.errors.sigma_v2_sq *= c * c;
    const ValidatedParameterSet vx = validate(xs);
    CHECK(close_rel(th::mse_tp_min(vx), th::mse_tp_min(v), 1e-10));
    CHECK(close_rel(th::mse_tr(vx).total, th::mse_tr(v).total, 1e-10));
    CHECK(close_rel(th::b_opt(vx), th::b_opt(v) / c, 1e-10));
    CHECK(close_rel(th::m2_opt(vx).m2, th::m2_opt(v).m2, 1e-10));
  }
}

TEST_CASE("decomposition additivity holds for every estimator") {
  auto g = rng::child_rng(19, rng::Stream::misc, 9);
  for (int i = 0; i < 100; ++i) {
    const ValidatedParameterSet v = validate(testing::random_params(g));
    const double b = th::b_opt(v);
    const double m2 = th::m2_opt(v).m2;
    for (const MseDecomposition& d :
         {th::mse_t1(v), th::mse_tr(v), th::mse_tlr_decomposition(v, b),
          th::mse_tp_decomposition(v, m2)}) {
      CHECK(close_rel(d.total,
                      d.srs_base() + d.nr_contribution + d.me_contribution,
                      1e-9));
    }
  }
}
