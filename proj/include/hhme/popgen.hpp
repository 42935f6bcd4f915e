#ifndef HHME_POPGEN_HPP
#define HHME_POPGEN_HPP

#include <cstdint>
#include <optional>

#include "hhme/model.hpp"

namespace hhme::popgen {

/// Target moments for one stratum. A stratum may be empty (size 0); a
/// nonempty stratum needs at least 3 units for exact moment matching.
struct StratumSpec {
  std::int64_t size = 0;
  double mu_x = 0.0, mu_y = 0.0;
  double S_x = 0.0, S_y = 0.0;
  double rho = 0.0;
};

struct PopulationSpec {
  StratumSpec respondents;     // stratum 1
  StratumSpec nonrespondents;  // stratum 2

  std::int64_t N() const { return respondents.size + nonrespondents.size; }
  double W2() const {
    return static_cast<double>(nonrespondents.size) / static_cast<double>(N());
  }
};

/// Throws ValidationError on an infeasible spec (stratum size 1 or 2,
/// SD < 0, |rho| > 1, empty population).
void check_spec(const PopulationSpec& spec);

/// Builds a population whose realized per-stratum means, SDs (divisor
/// size-1) and correlations equal the spec exactly, up to floating-point
/// rounding. Gaussian base draws, then an exact affine re-standardization:
/// de-mean, whiten by two-variable Gram-Schmidt, re-correlate, re-scale.
/// Deterministic given (spec, seed).
FinitePopulation generate_population(const PopulationSpec& spec, std::uint64_t seed);

/// Realized moments of a population, overall and per stratum. Correlations
/// carry a defined-flag: a constant column has no correlation.
struct PopulationMoments {
  std::int64_t N = 0, N1 = 0, N2 = 0;
  double W1 = 0.0, W2 = 0.0;
  double mu_x = 0.0, mu_y = 0.0, S_x = 0.0, S_y = 0.0, rho = 0.0;
  bool rho_defined = false;
  double mu_x1 = 0.0, mu_y1 = 0.0, S_x1 = 0.0, S_y1 = 0.0, rho1 = 0.0;
  bool rho1_defined = false;
  double mu_x2 = 0.0, mu_y2 = 0.0, S_x2 = 0.0, S_y2 = 0.0, rho2 = 0.0;
  bool rho2_defined = false;
};

PopulationMoments population_moments(const FinitePopulation& pop);

/// Solves for the stratum-1 moments that make the realized overall moments
/// equal the overall targets in `params`, given the stratum-2 moments and
/// W2. Uses the exact stratified decomposition of the divisor-(N-1) sums of
/// squares. Requires finite N and, when W2 > 0, mu_y2/mu_x2.
/// Throws ValidationError when no real solution exists (implied stratum-1
/// variance negative or |rho1| > 1).
PopulationSpec stratum_specs_from_overall(const ValidatedParameterSet& params);

/// CSV dump with header x_true,y_true,stratum.
void dump_population_csv(const FinitePopulation& pop, const std::string& path);

}  // namespace hhme::popgen

#endif  // HHME_POPGEN_HPP
