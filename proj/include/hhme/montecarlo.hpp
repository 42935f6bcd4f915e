#ifndef HHME_MONTECARLO_HPP
#define HHME_MONTECARLO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hhme/model.hpp"

namespace hhme::montecarlo {

/// Replication-run settings. Coefficients default to the theory optima;
/// explicit values override them. `workers = 0` picks the hardware count.
/// The report is a pure function of (population, params, reps, seed, n,
/// coefficients) — the worker count never changes a byte of it.
struct RunConfig {
  std::uint64_t reps = 1;
  std::uint64_t seed = 0;
  std::int64_t n = 0;  // 0 = params.n; otherwise replaces it (revalidated)
  std::optional<double> b;
  std::optional<double> m2;
  int workers = 0;
};

/// Runs `cfg.reps` independent two-phase replications and compares the
/// empirical bias/MSE of t1, t_r, t_lr, t_p against the first-order theory.
/// Replications where the ratio denominator collapses are excluded and
/// tallied; more than 1% of them aborts with a diagnostic.
/// Throws ValidationError when `params` disagree with the realized
/// population moments beyond 1e-6 relative.
MonteCarloReport run(const FinitePopulation& pop,
                     const ValidatedParameterSet& params, const RunConfig& cfg);

struct GridPoint {
  double m2 = 0.0;
  double empirical_mse = 0.0;
  double se_mse = 0.0;
};

struct GridSearchResult {
  double m2_hat = 0.0;             // grid argmin of the empirical MSE
  std::vector<GridPoint> curve;
  std::int64_t count = 0;          // replications entering every point
  std::int64_t ratio_undefined = 0;
};

/// Empirical MSE of t_p(m2) = (1-m2) y* + m2 (y*/x*) Xbar over a grid of m2
/// values, with common random numbers: every grid point sees the identical
/// replication stream.
GridSearchResult grid_search_m2(const FinitePopulation& pop,
                                const ValidatedParameterSet& params,
                                const RunConfig& cfg,
                                const std::vector<double>& grid);

/// Stable, versioned JSON emission (schema "hhme.simreport/1").
std::string to_json(const MonteCarloReport& report);

/// Aligned text table carrying the same numbers as the JSON.
std::string format_table(const MonteCarloReport& report);

/// Per-replication CSV dump (rep, n1, n2, r, y_star, x_star, t1, t_r, t_lr,
/// t_p); rows beyond `max_rows` are not written. Ratio-undefined rows leave
/// the t_r / t_p cells empty.
void dump_replications_csv(const FinitePopulation& pop,
                           const ValidatedParameterSet& params,
                           const RunConfig& cfg, const std::string& path,
                           std::uint64_t max_rows = 100000);

}  // namespace hhme::montecarlo

#endif  // HHME_MONTECARLO_HPP
