#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hhme/popgen.hpp"
#include "hhme/reproduce.hpp"
#include "test_util.hpp"

using namespace hhme;
namespace pg = hhme::popgen;

namespace {

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1.0});
}

pg::StratumSpec random_stratum(rng::Xoshiro256pp& g, std::int64_t size) {
  pg::StratumSpec s;
  s.size = size;
  s.mu_x = testing::uniform_in(g, -100.0, 100.0);
  s.mu_y = testing::uniform_in(g, -100.0, 100.0);
  s.S_x = testing::uniform_in(g, 0.0, 50.0);
  s.S_y = testing::uniform_in(g, 0.0, 50.0);
  s.rho = testing::uniform_in(g, -1.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("generated populations match the spec moments exactly") {
  auto g = rng::child_rng(31, rng::Stream::misc, 0);
  for (int i = 0; i < 40; ++i) {
    pg::PopulationSpec spec;
    spec.respondents = random_stratum(g, 3 + static_cast<std::int64_t>(rng::bounded(g, 400)));
    spec.nonrespondents =
        (i % 4 == 0) ? pg::StratumSpec{}  // empty non-response stratum
                     : random_stratum(g, 3 + static_cast<std::int64_t>(rng::bounded(g, 400)));
    const FinitePopulation pop = pg::generate_population(spec, 1000 + i);
    const pg::PopulationMoments m = pg::population_moments(pop);
    CHECK(m.N1 == spec.respondents.size);
    CHECK(m.N2 == spec.nonrespondents.size);
    CHECK(close_rel(m.mu_x1, spec.respondents.mu_x, 1e-9));
    CHECK(close_rel(m.mu_y1, spec.respondents.mu_y, 1e-9));
    CHECK(close_rel(m.S_x1, spec.respondents.S_x, 1e-9));
    CHECK(close_rel(m.S_y1, spec.respondents.S_y, 1e-9));
    if (m.rho1_defined) CHECK(std::abs(m.rho1 - spec.respondents.rho) < 1e-9);
    if (spec.nonrespondents.size > 0) {
      CHECK(close_rel(m.mu_x2, spec.nonrespondents.mu_x, 1e-9));
      CHECK(close_rel(m.S_y2, spec.nonrespondents.S_y, 1e-9));
      if (m.rho2_defined) CHECK(std::abs(m.rho2 - spec.nonrespondents.rho) < 1e-9);
    }
  }
}

TEST_CASE("generation is deterministic given (spec, seed)") {
  auto g = rng::child_rng(32, rng::Stream::misc, 0);
  pg::PopulationSpec spec;
  spec.respondents = random_stratum(g, 200);
  spec.nonrespondents = random_stratum(g, 100);
  const FinitePopulation a = pg::generate_population(spec, 77);
  const FinitePopulation b = pg::generate_population(spec, 77);
  CHECK(a.x_true == b.x_true);
  CHECK(a.y_true == b.y_true);
  CHECK(a.stratum == b.stratum);
  const FinitePopulation c = pg::generate_population(spec, 78);
  CHECK(a.x_true != c.x_true);
}

TEST_CASE("zero SD produces a constant column") {
  pg::PopulationSpec spec;
  spec.respondents = {10, 3.0, 7.0, 2.0, 0.0, 0.5};
  const FinitePopulation pop = pg::generate_population(spec, 5);
  for (double y : pop.y_true) CHECK(y == 7.0);
}

TEST_CASE("perfect correlation produces exact colinearity") {
  pg::PopulationSpec spec;
  spec.respondents = {50, 0.0, 0.0, 1.0, 2.0, 1.0};
  const FinitePopulation pop = pg::generate_population(spec, 6);
  const pg::PopulationMoments m = pg::population_moments(pop);
  CHECK(m.rho1_defined);
  CHECK(m.rho1 == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < pop.x_true.size(); ++i)
    CHECK(pop.y_true[i] == doctest::Approx(2.0 * pop.x_true[i]).epsilon(1e-9));
}

TEST_CASE("reference-design strata are realized exactly at N = 7000") {
  ParameterSet p = reproduce::reference_parameters_with_assumptions();
  p.N = 7000;
  const ValidatedParameterSet v = validate(p);
  const pg::PopulationSpec spec = pg::stratum_specs_from_overall(v);
  CHECK(spec.nonrespondents.size == 1750);
  CHECK(spec.respondents.size == 5250);
  CHECK(spec.nonrespondents.mu_y == 597.29);
  CHECK(spec.nonrespondents.S_x == 631.51);

  const FinitePopulation pop = pg::generate_population(spec, 99);
  const pg::PopulationMoments m = pg::population_moments(pop);
  CHECK(close_rel(m.mu_y, 981.29, 1e-9));
  CHECK(close_rel(m.mu_x, 1755.53, 1e-9));
  CHECK(close_rel(m.S_y, 613.66, 1e-9));
  CHECK(close_rel(m.S_x, 1406.13, 1e-9));
  CHECK(std::abs(m.rho - 0.778) < 1e-9);
  CHECK(close_rel(m.mu_y2, 597.29, 1e-9));
  CHECK(close_rel(m.mu_x2, 1100.24, 1e-9));
  CHECK(close_rel(m.S_y2, 244.11, 1e-9));
  CHECK(close_rel(m.S_x2, 631.51, 1e-9));
  CHECK(std::abs(m.rho2 - 0.445) < 1e-9);
  CHECK(m.W2 == 0.25);
}

TEST_CASE("two-point population by hand") {
  FinitePopulation pop;
  pop.x_true = {0.0, 1.0};
  pop.y_true = {0.0, 1.0};
  pop.stratum = {1, 1};
  pop.N1 = 2;
  pop.N2 = 0;
  const pg::PopulationMoments m = pg::population_moments(pop);
  CHECK(m.mu_x == 0.5);
  CHECK(m.mu_y == 0.5);
  CHECK(m.S_x == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  CHECK(m.S_y == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  CHECK(m.rho_defined);
  CHECK(m.rho == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("constant population reports correlation as undefined") {
  FinitePopulation pop;
  pop.x_true = {3.0, 3.0, 3.0};
  pop.y_true = {1.0, 1.0, 1.0};
  pop.stratum = {1, 1, 1};
  pop.N1 = 3;
  pop.N2 = 0;
  const pg::PopulationMoments m = pg::population_moments(pop);
  CHECK(m.S_x == 0.0);
  CHECK(m.S_y == 0.0);
  CHECK_FALSE(m.rho_defined);
}

TEST_CASE("infeasible specs are rejected") {
  SUBCASE("tiny strata") {
    pg::PopulationSpec spec;
    spec.respondents = {2, 0.0, 0.0, 1.0, 1.0, 0.0};
    CHECK_THROWS_AS(pg::generate_population(spec, 1), ValidationError);
  }
  SUBCASE("overall variance too small for the strata") {
    ParameterSet p = reproduce::reference_parameters_with_assumptions();
    p.N = 7000;
    p.S_y = 50.0;  // far below what the stratum means alone imply
    CHECK(testing::throws_naming(
        [&] { pg::stratum_specs_from_overall(validate(p)); },
        "stratum-1 variance"));
  }
  SUBCASE("missing stratum-2 means") {
    ParameterSet p = reproduce::reference_parameters_with_assumptions();
    p.N = 7000;
    p.mu_y2.reset();
    CHECK(testing::throws_naming(
        [&] { pg::stratum_specs_from_overall(validate(p)); }, "mu_y2"));
  }
}

TEST_CASE("population CSV dump") {
  pg::PopulationSpec spec;
  spec.respondents = {5, 1.0, 2.0, 0.5, 0.5, 0.3};
  const FinitePopulation pop = pg::generate_population(spec, 3);
  const std::string path = "popdump_test.csv";
  pg::dump_population_csv(pop, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x_true,y_true,stratum");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  std::remove(path.c_str());
}
