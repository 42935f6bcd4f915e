#include "hhme/popgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "hhme/rng.hpp"

namespace hhme::popgen {

namespace {

void check_stratum(const StratumSpec& s, const char* name) {
  if (s.size < 0) throw ValidationError(std::string(name) + ": size must be >= 0");
  if (s.size == 0) return;
  if (s.size < 3)
    throw ValidationError(std::string(name) +
                          ": a nonempty stratum needs at least 3 units");
  if (s.S_x < 0.0 || s.S_y < 0.0)
    throw ValidationError(std::string(name) + ": SDs must be nonnegative");
  if (!(std::abs(s.rho) <= 1.0))
    throw ValidationError(std::string(name) + ": rho out of range [-1, 1]");
}

// Exactly standardize in place: sample mean 0, sample SD 1 (divisor m-1).
// Returns false when the column is numerically constant.
bool standardize(std::vector<double>& z) {
  const auto m = static_cast<double>(z.size());
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double& v : z) {
    v -= mean;
    ss += v * v;
  }
  if (!(ss > 0.0)) return false;
  const double sd = std::sqrt(ss / (m - 1.0));
  for (double& v : z) v /= sd;
  return true;
}

// One stratum: fills x/y[offset .. offset+m) with exactly matched moments.
void fill_stratum(const StratumSpec& s, std::uint64_t seed, std::uint64_t stratum_id,
                  std::vector<double>& x, std::vector<double>& y,
                  std::size_t offset) {
  const std::size_t m = static_cast<std::size_t>(s.size);
  std::vector<double> a(m), b(m);
  for (std::uint64_t attempt = 0;; ++attempt) {
    auto g = rng::child_rng(seed, rng::Stream::population,
                            stratum_id * 256 + attempt);
    for (std::size_t i = 0; i < m; ++i) a[i] = rng::normal(g);
    for (std::size_t i = 0; i < m; ++i) b[i] = rng::normal(g);
    if (!standardize(a)) continue;
    // remove the projection of b on a, then standardize the residual
    double mean_b = 0.0;
    for (double v : b) mean_b += v;
    mean_b /= static_cast<double>(m);
    for (double& v : b) v -= mean_b;
    double dot = 0.0;
    for (std::size_t i = 0; i < m; ++i) dot += a[i] * b[i];
    const double proj = dot / static_cast<double>(m - 1);  // sum a^2 = m-1
    for (std::size_t i = 0; i < m; ++i) b[i] -= proj * a[i];
    if (!standardize(b)) continue;
    break;
  }
  // re-correlate: corr(a, e) = rho exactly in sample moments
  const double rho = s.rho;
  const double res = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  for (std::size_t i = 0; i < m; ++i) {
    const double e = rho * a[i] + res * b[i];
    x[offset + i] = s.mu_x + s.S_x * a[i];
    y[offset + i] = s.mu_y + s.S_y * e;
  }
}

struct ColumnStats {
  double mean = 0.0;
  double ss = 0.0;  // sum of squared deviations
};

ColumnStats column_stats(const std::vector<double>& v, const std::vector<std::uint8_t>& label,
                         int which, std::int64_t count) {
  ColumnStats c;
  if (count < 1) return c;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (which == 0 || label[i] == which) c.mean += v[i];
  c.mean /= static_cast<double>(count);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (which == 0 || label[i] == which) {
      const double d = v[i] - c.mean;
      c.ss += d * d;
    }
  return c;
}

double cross_ss(const FinitePopulation& pop, int which, double mx, double my) {
  double s = 0.0;
  for (std::size_t i = 0; i < pop.x_true.size(); ++i)
    if (which == 0 || pop.stratum[i] == which)
      s += (pop.x_true[i] - mx) * (pop.y_true[i] - my);
  return s;
}

}  // namespace

void check_spec(const PopulationSpec& spec) {
  check_stratum(spec.respondents, "respondents");
  check_stratum(spec.nonrespondents, "nonrespondents");
  if (spec.N() < 1) throw ValidationError("population must have at least 1 unit");
}

FinitePopulation generate_population(const PopulationSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  FinitePopulation pop;
  const std::size_t N = static_cast<std::size_t>(spec.N());
  pop.x_true.resize(N);
  pop.y_true.resize(N);
  pop.stratum.resize(N);
  pop.N1 = spec.respondents.size;
  pop.N2 = spec.nonrespondents.size;
  for (std::int64_t i = 0; i < pop.N1; ++i) pop.stratum[i] = 1;
  for (std::int64_t i = pop.N1; i < spec.N(); ++i) pop.stratum[i] = 2;
  if (pop.N1 > 0) fill_stratum(spec.respondents, seed, 1, pop.x_true, pop.y_true, 0);
  if (pop.N2 > 0)
    fill_stratum(spec.nonrespondents, seed, 2, pop.x_true, pop.y_true,
                 static_cast<std::size_t>(pop.N1));
  return pop;
}

PopulationMoments population_moments(const FinitePopulation& pop) {
  pop.check();
  if (pop.size() < 2) throw ValidationError("population_moments needs N >= 2");
  PopulationMoments m;
  m.N = pop.size();
  m.N1 = pop.N1;
  m.N2 = pop.N2;
  m.W1 = pop.W1();
  m.W2 = pop.W2();

  const auto fill = [&](int which, std::int64_t count, double& mu_x, double& mu_y,
                        double& S_x, double& S_y, double& rho, bool& rho_defined) {
    if (count < 1) return;
    const ColumnStats cx = column_stats(pop.x_true, pop.stratum, which, count);
    const ColumnStats cy = column_stats(pop.y_true, pop.stratum, which, count);
    mu_x = cx.mean;
    mu_y = cy.mean;
    if (count < 2) return;
    const double denom = static_cast<double>(count - 1);
    S_x = std::sqrt(cx.ss / denom);
    S_y = std::sqrt(cy.ss / denom);
    rho_defined = cx.ss > 0.0 && cy.ss > 0.0;
    if (rho_defined) rho = cross_ss(pop, which, cx.mean, cy.mean) / std::sqrt(cx.ss * cy.ss);
  };

  fill(0, m.N, m.mu_x, m.mu_y, m.S_x, m.S_y, m.rho, m.rho_defined);
  fill(1, m.N1, m.mu_x1, m.mu_y1, m.S_x1, m.S_y1, m.rho1, m.rho1_defined);
  fill(2, m.N2, m.mu_x2, m.mu_y2, m.S_x2, m.S_y2, m.rho2, m.rho2_defined);
  return m;
}

PopulationSpec stratum_specs_from_overall(const ValidatedParameterSet& v) {
  const ParameterSet& p = v.params();
  if (!p.N) throw ValidationError("population construction requires finite N");
  const std::int64_t N = *p.N;
  const auto N2 = static_cast<std::int64_t>(std::llround(p.W2 * static_cast<double>(N)));
  const std::int64_t N1 = N - N2;

  PopulationSpec spec;
  spec.nonrespondents.size = N2;
  spec.respondents.size = N1;

  if (N2 == 0) {
    spec.respondents = {N1, p.mu_x, p.mu_y, p.S_x, p.S_y, p.rho};
    return spec;
  }
  if (!p.mu_y2 || !p.mu_x2)
    throw ValidationError("mu_y2 and mu_x2 are required when W2 > 0");
  spec.nonrespondents = {N2, *p.mu_x2, *p.mu_y2, p.S_x2, p.S_y2, p.rho2};
  if (N1 == 0) return spec;  // W2 = 1: the population is the non-response stratum

  const double Nd = static_cast<double>(N);
  const double N1d = static_cast<double>(N1);
  const double N2d = static_cast<double>(N2);
  const double mu_y1 = (Nd * p.mu_y - N2d * *p.mu_y2) / N1d;
  const double mu_x1 = (Nd * p.mu_x - N2d * *p.mu_x2) / N1d;

  // exact decomposition of the total sum of squares across strata
  const auto solve_ss = [&](double S_total, double S2, double mu1, double mu2,
                            double mu, const char* axis) {
    const double total_ss = (Nd - 1.0) * S_total * S_total;
    double ss1 = total_ss - (N2d - 1.0) * S2 * S2 - N1d * (mu1 - mu) * (mu1 - mu) -
                 N2d * (mu2 - mu) * (mu2 - mu);
    const double tol = 1e-9 * std::max(1.0, total_ss);
    if (ss1 < -tol)
      throw ValidationError(std::string("implied stratum-1 variance of ") + axis +
                            " is negative; overall and stratum-2 moments are inconsistent");
    return std::max(0.0, ss1);
  };
  const double ss_y1 = solve_ss(p.S_y, p.S_y2, mu_y1, *p.mu_y2, p.mu_y, "y");
  const double ss_x1 = solve_ss(p.S_x, p.S_x2, mu_x1, *p.mu_x2, p.mu_x, "x");
  if (N1 < 2 && (ss_y1 > 0 || ss_x1 > 0))
    throw ValidationError("stratum 1 too small to carry the implied variance");
  const double S_y1 = N1 > 1 ? std::sqrt(ss_y1 / (N1d - 1.0)) : 0.0;
  const double S_x1 = N1 > 1 ? std::sqrt(ss_x1 / (N1d - 1.0)) : 0.0;

  const double total_xy = (Nd - 1.0) * p.rho * p.S_x * p.S_y;
  const double xy2 = (N2d - 1.0) * p.rho2 * p.S_x2 * p.S_y2;
  const double xy1 = total_xy - xy2 - N1d * (mu_x1 - p.mu_x) * (mu_y1 - p.mu_y) -
                     N2d * (*p.mu_x2 - p.mu_x) * (*p.mu_y2 - p.mu_y);
  double rho1 = 0.0;
  if (S_x1 > 0.0 && S_y1 > 0.0) {
    rho1 = xy1 / ((N1d - 1.0) * S_x1 * S_y1);
    if (std::abs(rho1) > 1.0 + 1e-9)
      throw ValidationError(
          "implied stratum-1 correlation out of [-1, 1]; overall and stratum-2 "
          "moments are inconsistent");
    rho1 = std::clamp(rho1, -1.0, 1.0);
  }
  spec.respondents = {N1, mu_x1, mu_y1, S_x1, S_y1, rho1};
  return spec;
}

void dump_population_csv(const FinitePopulation& pop, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write population CSV: " + path);
  out << "x_true,y_true,stratum\n";
  out.precision(17);
  for (std::size_t i = 0; i < pop.x_true.size(); ++i)
    out << pop.x_true[i] << ',' << pop.y_true[i] << ','
        << static_cast<int>(pop.stratum[i]) << '\n';
}

}  // namespace hhme::popgen
