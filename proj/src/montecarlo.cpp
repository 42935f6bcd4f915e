#include "hhme/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hhme/estimators.hpp"
#include "hhme/popgen.hpp"
#include "hhme/sampling.hpp"
#include "hhme/theory.hpp"

namespace hhme::montecarlo {

namespace {

constexpr std::uint64_t kBlockSize = 8192;

// Neumaier compensated sum. Deterministic for a fixed add order; blocks are
// always merged in block-index order, so results never depend on scheduling.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void merge(const CompensatedSum& o) {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Sufficient statistics for one estimator: moments of d = estimate - Ybar.
struct EstAccum {
  std::int64_t count = 0;
  CompensatedSum d, d2, d4;

  void add(double dv) {
    ++count;
    d.add(dv);
    const double sq = dv * dv;
    d2.add(sq);
    d4.add(sq * sq);
  }
  void merge(const EstAccum& o) {
    count += o.count;
    d.merge(o.d);
    d2.merge(o.d2);
    d4.merge(o.d4);
  }
};

struct BlockStats {
  std::array<EstAccum, 4> est;  // t1, t_r, t_lr, t_p
  std::int64_t flagged = 0;

  void merge(const BlockStats& o) {
    for (std::size_t i = 0; i < est.size(); ++i) est[i].merge(o.est[i]);
    flagged += o.flagged;
  }
};

double kahan_mean(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1.0});
}

void check_population_consistency(const FinitePopulation& pop,
                                  const ValidatedParameterSet& v) {
  const popgen::PopulationMoments m = popgen::population_moments(pop);
  const ParameterSet& p = v.params();
  constexpr double tol = 1e-6;
  const auto reject = [](const char* field) {
    throw ValidationError(std::string("parameter/population mismatch on ") + field);
  };
  if (p.N && *p.N != m.N) reject("N");
  if (!close_rel(p.mu_y, m.mu_y, tol)) reject("mu_y");
  if (!close_rel(p.mu_x, m.mu_x, tol)) reject("mu_x");
  if (!close_rel(p.S_y, m.S_y, tol)) reject("S_y");
  if (!close_rel(p.S_x, m.S_x, tol)) reject("S_x");
  if (m.rho_defined && std::abs(p.rho - m.rho) > tol) reject("rho");
  if (std::abs(p.W2 - m.W2) > tol) reject("W2");
  if (m.N2 > 1) {
    if (!close_rel(p.S_y2, m.S_y2, tol)) reject("S_y2");
    if (!close_rel(p.S_x2, m.S_x2, tol)) reject("S_x2");
    if (m.rho2_defined && std::abs(p.rho2 - m.rho2) > tol) reject("rho2");
    if (p.mu_y2 && !close_rel(*p.mu_y2, m.mu_y2, tol)) reject("mu_y2");
    if (p.mu_x2 && !close_rel(*p.mu_x2, m.mu_x2, tol)) reject("mu_x2");
  }
}

struct Coefficients {
  double b = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

Coefficients resolve_coefficients(const ValidatedParameterSet& v,
                                  const RunConfig& cfg) {
  Coefficients c;
  c.b = cfg.b ? *cfg.b : theory::b_opt(v);
  c.m2 = cfg.m2 ? *cfg.m2 : theory::m2_opt(v).m2;
  c.m1 = 1.0 - c.m2;
  return c;
}

ValidatedParameterSet effective_params(const ValidatedParameterSet& v,
                                       const RunConfig& cfg) {
  if (cfg.n == 0 || cfg.n == v.n()) return v;
  ParameterSet p = v.params();
  p.n = cfg.n;
  return validate(p);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs `body(block_index, first_rep, last_rep)` over all blocks, spread
// across workers. Block indices are claimed via an atomic counter; results
// must be written into per-block slots so the later fold is order-fixed.
template <class Body>
void parallel_blocks(std::uint64_t reps, int workers, const Body& body) {
  const std::uint64_t nblocks = (reps + kBlockSize - 1) / kBlockSize;
  std::atomic<std::uint64_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::uint64_t blk = next.fetch_add(1);
      if (blk >= nblocks) return;
      const std::uint64_t first = blk * kBlockSize;
      const std::uint64_t last = std::min(reps, first + kBlockSize);
      body(blk, first, last);
    }
  };
  const int nthreads = static_cast<int>(std::min<std::uint64_t>(
      static_cast<std::uint64_t>(resolve_workers(workers)), nblocks));
  if (nthreads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

struct Replicator {
  const FinitePopulation& pop;
  const ErrorModel& errors;
  std::int64_t n;
  double k;
  std::uint64_t seed;
  double xbar;

  // Produces the HH means of replication `rep` into `hh`; returns false when
  // the ratio denominator collapsed.
  bool operator()(std::uint64_t rep, sampling::SamplerScratch& scratch,
                  SampleRealization& buf, HHMeans& hh) const {
    auto g = rng::child_rng(seed, rng::Stream::replication, rep);
    sampling::run_replication_into(pop, errors, n, k, g, scratch, buf);
    hh = sampling::hh_means(buf);
    return estimators::ratio_defined(hh.x_star, xbar);
  }
};

}  // namespace

MonteCarloReport run(const FinitePopulation& pop,
                     const ValidatedParameterSet& params, const RunConfig& cfg) {
  if (cfg.reps < 1) throw ValidationError("reps must be >= 1");
  const ValidatedParameterSet v = effective_params(params, cfg);
  check_population_consistency(pop, v);
  const Coefficients coef = resolve_coefficients(v, cfg);

  const double ybar = kahan_mean(pop.y_true);
  const double xbar = kahan_mean(pop.x_true);
  const Replicator replicate{pop, v.errors(), v.n(), v.k(), cfg.seed, xbar};

  const std::uint64_t nblocks = (cfg.reps + kBlockSize - 1) / kBlockSize;
  std::vector<BlockStats> partials(nblocks);

  parallel_blocks(cfg.reps, cfg.workers, [&](std::uint64_t blk, std::uint64_t first,
                                             std::uint64_t last) {
    sampling::SamplerScratch scratch;
    SampleRealization buf;
    HHMeans hh;
    BlockStats stats;
    for (std::uint64_t rep = first; rep < last; ++rep) {
      if (!replicate(rep, scratch, buf, hh)) {
        ++stats.flagged;
        continue;
      }
      const double t1v = hh.y_star;
      const double trv = hh.y_star / hh.x_star * xbar;
      const double tlrv = hh.y_star + coef.b * (xbar - hh.x_star);
      const double tpv = coef.m1 * hh.y_star + coef.m2 * trv;
      stats.est[0].add(t1v - ybar);
      stats.est[1].add(trv - ybar);
      stats.est[2].add(tlrv - ybar);
      stats.est[3].add(tpv - ybar);
    }
    partials[blk] = stats;
  });

  BlockStats total;
  for (const BlockStats& b : partials) total.merge(b);

  if (static_cast<double>(total.flagged) >
      0.01 * static_cast<double>(cfg.reps)) {
    std::ostringstream msg;
    msg << "ratio-undefined in " << total.flagged << " of " << cfg.reps
        << " replications (>1%); the design places x* too close to zero";
    throw ValidationError(msg.str());
  }

  MonteCarloReport report;
  report.reps = cfg.reps;
  report.seed = cfg.seed;
  report.n = v.n();
  report.ybar_true = ybar;
  report.xbar_true = xbar;
  report.b_used = coef.b;
  report.m1_used = coef.m1;
  report.m2_used = coef.m2;
  report.ratio_undefined = total.flagged;
  report.design = v.params();

  const double theo[4] = {theory::mse_t1(v).total, theory::mse_tr(v).total,
                          theory::mse_tlr(v, coef.b), theory::mse_tp(v, coef.m2)};
  const char* names[4] = {"t1", "t_r", "t_lr", "t_p"};
  for (int i = 0; i < 4; ++i) {
    const EstAccum& a = total.est[i];
    EstimatorStats s;
    s.name = names[i];
    s.count = a.count;
    const double cnt = static_cast<double>(a.count);
    const double mean_d = a.d.value() / cnt;
    const double mean_d2 = a.d2.value() / cnt;
    const double mean_d4 = a.d4.value() / cnt;
    s.empirical_bias = mean_d;
    s.empirical_mean = ybar + mean_d;
    s.empirical_mse = mean_d2;
    s.theoretical_mse = theo[i];
    s.rel_deviation = mean_d2 / theo[i] - 1.0;
    s.se_mean = std::sqrt(std::max(0.0, mean_d2 - mean_d * mean_d) / cnt);
    s.se_mse = std::sqrt(std::max(0.0, mean_d4 - mean_d2 * mean_d2) / cnt);
    report.estimators.push_back(std::move(s));
  }
  return report;
}

GridSearchResult grid_search_m2(const FinitePopulation& pop,
                                const ValidatedParameterSet& params,
                                const RunConfig& cfg,
                                const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("m2 grid must be non-empty");
  const ValidatedParameterSet v = effective_params(params, cfg);
  check_population_consistency(pop, v);

  const double ybar = kahan_mean(pop.y_true);
  const double xbar = kahan_mean(pop.x_true);
  const Replicator replicate{pop, v.errors(), v.n(), v.k(), cfg.seed, xbar};

  struct GridBlock {
    std::vector<CompensatedSum> d2, d4;
    std::int64_t count = 0, flagged = 0;
  };
  const std::uint64_t nblocks = (cfg.reps + kBlockSize - 1) / kBlockSize;
  std::vector<GridBlock> partials(nblocks);

  parallel_blocks(cfg.reps, cfg.workers, [&](std::uint64_t blk, std::uint64_t first,
                                             std::uint64_t last) {
    sampling::SamplerScratch scratch;
    SampleRealization buf;
    HHMeans hh;
    GridBlock gb;
    gb.d2.resize(grid.size());
    gb.d4.resize(grid.size());
    for (std::uint64_t rep = first; rep < last; ++rep) {
      if (!replicate(rep, scratch, buf, hh)) {
        ++gb.flagged;
        continue;
      }
      ++gb.count;
      const double trv = hh.y_star / hh.x_star * xbar;
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double m2 = grid[j];
        const double d = (1.0 - m2) * hh.y_star + m2 * trv - ybar;
        const double sq = d * d;
        gb.d2[j].add(sq);
        gb.d4[j].add(sq * sq);
      }
    }
    partials[blk] = std::move(gb);
  });

  GridSearchResult result;
  std::vector<CompensatedSum> d2(grid.size()), d4(grid.size());
  for (const GridBlock& gb : partials) {
    result.count += gb.count;
    result.ratio_undefined += gb.flagged;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      d2[j].merge(gb.d2[j]);
      d4[j].merge(gb.d4[j]);
    }
  }

  const double cnt = static_cast<double>(result.count);
  std::size_t best = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    GridPoint pt;
    pt.m2 = grid[j];
    pt.empirical_mse = d2[j].value() / cnt;
    const double mean_d4 = d4[j].value() / cnt;
    pt.se_mse = std::sqrt(
        std::max(0.0, mean_d4 - pt.empirical_mse * pt.empirical_mse) / cnt);
    result.curve.push_back(pt);
    if (pt.empirical_mse < result.curve[best].empirical_mse) best = j;
  }
  result.m2_hat = result.curve[best].m2;
  return result;
}

std::string to_json(const MonteCarloReport& r) {
  nlohmann::json j;
  j["schema"] = "hhme.simreport/1";
  j["run"] = {{"reps", r.reps}, {"seed", r.seed}, {"n", r.n}};
  j["coefficients"] = {{"b", r.b_used}, {"m1", r.m1_used}, {"m2", r.m2_used}};
  j["population"] = {{"ybar", r.ybar_true}, {"xbar", r.xbar_true}};
  j["ratio_undefined"] = r.ratio_undefined;
  nlohmann::json design;
  design["n"] = r.design.n;
  if (r.design.N) design["N"] = *r.design.N;
  design["W2"] = r.design.W2;
  design["k"] = r.design.k;
  design["mu_y"] = r.design.mu_y;
  design["mu_x"] = r.design.mu_x;
  design["S_y"] = r.design.S_y;
  design["S_x"] = r.design.S_x;
  design["rho"] = r.design.rho;
  design["S_y2"] = r.design.S_y2;
  design["S_x2"] = r.design.S_x2;
  design["rho2"] = r.design.rho2;
  if (r.design.mu_y2) design["mu_y2"] = *r.design.mu_y2;
  if (r.design.mu_x2) design["mu_x2"] = *r.design.mu_x2;
  design["sigma_u_sq"] = r.design.errors.sigma_u_sq;
  design["sigma_v_sq"] = r.design.errors.sigma_v_sq;
  design["sigma_u2_sq"] = r.design.errors.sigma_u2_sq;
  design["sigma_v2_sq"] = r.design.errors.sigma_v2_sq;
  j["design"] = design;
  nlohmann::json ests = nlohmann::json::array();
  for (const EstimatorStats& e : r.estimators) {
    ests.push_back({{"name", e.name},
                    {"count", e.count},
                    {"mean", e.empirical_mean},
                    {"bias", e.empirical_bias},
                    {"mse", e.empirical_mse},
                    {"theory_mse", e.theoretical_mse},
                    {"rel_deviation", e.rel_deviation},
                    {"se_mean", e.se_mean},
                    {"se_mse", e.se_mse}});
  }
  j["estimators"] = ests;
  return j.dump(2);
}

std::string format_table(const MonteCarloReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "replications: %llu   seed: %llu   n: %lld\n",
                static_cast<unsigned long long>(r.reps),
                static_cast<unsigned long long>(r.seed),
                static_cast<long long>(r.n));
  out << line;
  std::snprintf(line, sizeof line,
                "coefficients: b = %.6f   m1 = %.6f   m2 = %.6f\n", r.b_used,
                r.m1_used, r.m2_used);
  out << line;
  std::snprintf(line, sizeof line, "ratio-undefined replications: %lld\n\n",
                static_cast<long long>(r.ratio_undefined));
  out << line;
  std::snprintf(line, sizeof line, "%-6s %12s %14s %14s %10s %12s %12s\n",
                "est", "bias", "empirical MSE", "theory MSE", "rel.dev", "se(mean)",
                "se(MSE)");
  out << line;
  for (const EstimatorStats& e : r.estimators) {
    std::snprintf(line, sizeof line,
                  "%-6s %12.5f %14.5f %14.5f %9.3f%% %12.5f %12.5f\n",
                  e.name.c_str(), e.empirical_bias, e.empirical_mse,
                  e.theoretical_mse, 100.0 * e.rel_deviation, e.se_mean, e.se_mse);
    out << line;
  }
  return out.str();
}

void dump_replications_csv(const FinitePopulation& pop,
                           const ValidatedParameterSet& params,
                           const RunConfig& cfg, const std::string& path,
                           std::uint64_t max_rows) {
  const ValidatedParameterSet v = effective_params(params, cfg);
  check_population_consistency(pop, v);
  const Coefficients coef = resolve_coefficients(v, cfg);
  const double xbar = kahan_mean(pop.x_true);
  const Replicator replicate{pop, v.errors(), v.n(), v.k(), cfg.seed, xbar};

  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write replication CSV: " + path);
  out << "rep,n1,n2,r,y_star,x_star,t1,t_r,t_lr,t_p\n";
  out.precision(17);
  sampling::SamplerScratch scratch;
  SampleRealization buf;
  HHMeans hh;
  const std::uint64_t rows = std::min<std::uint64_t>(cfg.reps, max_rows);
  for (std::uint64_t rep = 0; rep < rows; ++rep) {
    const bool ok = replicate(rep, scratch, buf, hh);
    out << rep << ',' << buf.n1 << ',' << buf.n2 << ',' << buf.r << ','
        << hh.y_star << ',' << hh.x_star << ',' << hh.y_star << ',';
    if (ok) {
      const EstimateSet e =
          estimators::evaluate(hh, xbar, coef.b, coef.m1, coef.m2);
      out << e.t_r << ',' << e.t_lr << ',' << e.t_p << '\n';
    } else {
      out << ',' << hh.y_star + coef.b * (xbar - hh.x_star) << ",\n";
    }
  }
}

}  // namespace hhme::montecarlo
