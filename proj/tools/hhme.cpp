// hhme: finite-population mean estimation under two-phase non-response
// subsampling and additive measurement error.
//
// Subcommands:
//   theory     closed-form MSE decomposition table from a config file
//   simulate   Monte Carlo verification of the formulas on a synthetic
//              population with exactly matched moments
//   ingest     derive a config file from a paired true/measured dataset
//   reproduce  recompute the reference-study comparison and flag its
//              inconsistencies
//
// Exit codes: 0 ok, 1 usage, 2 validation, 3 tolerance failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hhme/ingest.hpp"
#include "hhme/model.hpp"
#include "hhme/montecarlo.hpp"
#include "hhme/popgen.hpp"
#include "hhme/reproduce.hpp"
#include "hhme/theory.hpp"

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

std::uint64_t fallback_seed() {
  if (const char* env = std::getenv("HHME_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw hhme::ValidationError("HHME_SEED is not an integer");
    }
  }
  return kDefaultSeed;
}

struct TheoryOptions {
  std::string config;
  bool json = false;
  bool no_decomposition = false;
};

int run_theory(const TheoryOptions& opt) {
  using namespace hhme;
  const ValidatedParameterSet v = validate(load_params(opt.config));
  const DerivedMoments m = theory::derive_moments(v);
  const double b = theory::b_opt(v);
  const theory::ClassWeights w = theory::m2_opt(v);
  const MseDecomposition rows[4] = {
      theory::mse_t1(v), theory::mse_tr(v), theory::mse_tlr_decomposition(v, b),
      theory::mse_tp_decomposition(v, w.m2)};
  const char* names[4] = {"t1", "t_r", "t_lr", "t_p"};
  const theory::EfficiencyReport eff = theory::efficiency_report(v);
  const double bias_r = theory::bias_tr(v);

  if (opt.json) {
    nlohmann::json j;
    j["schema"] = "hhme.theory/1";
    j["moments"] = {{"A", m.A},     {"M", m.M},         {"Nq", m.Nq},
                    {"O", m.O},     {"R", m.R},         {"Ee0sq", m.Ee0sq},
                    {"Ee1sq", m.Ee1sq}, {"Ee0e1", m.Ee0e1}, {"C_y", m.C_y},
                    {"C_x", m.C_x}, {"C_y2", m.C_y2},   {"C_x2", m.C_x2}};
    j["coefficients"] = {{"b_opt", b}, {"m1_opt", w.m1}, {"m2_opt", w.m2}};
    j["bias_tr"] = bias_r;
    j["efficiency"] = {{"gain_vs_t1", eff.gain_vs_t1},
                       {"gain_vs_tr", eff.gain_vs_tr}};
    nlohmann::json tab;
    for (int i = 0; i < 4; ++i) {
      tab[names[i]] = {{"without_error", rows[i].without_error},
                       {"me_contribution", rows[i].me_contribution},
                       {"nr_contribution", rows[i].nr_contribution},
                       {"total", rows[i].total}};
    }
    j["mse"] = tab;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  char line[256];
  std::printf("moments: A = %.8g  M = %.8g  Nq = %.8g  O = %.8g  R = %.8g\n",
              m.A, m.M, m.Nq, m.O, m.R);
  std::printf("coefficients: b* = %.8g  m1* = %.8g  m2* = %.8g\n", b, w.m1, w.m2);
  std::printf("bias(t_r) = %.8g\n\n", bias_r);
  if (opt.no_decomposition) {
    std::snprintf(line, sizeof line, "%-6s %16s\n", "est", "MSE total");
    std::fputs(line, stdout);
    for (int i = 0; i < 4; ++i)
      std::printf("%-6s %16.4f\n", names[i], rows[i].total);
  } else {
    std::snprintf(line, sizeof line, "%-6s %16s %16s %16s %16s\n", "est",
                  "MSE w/o error", "ME contribution", "NR contribution",
                  "MSE total");
    std::fputs(line, stdout);
    for (int i = 0; i < 4; ++i)
      std::printf("%-6s %16.4f %16.4f %16.4f %16.4f\n", names[i],
                  rows[i].without_error, rows[i].me_contribution,
                  rows[i].nr_contribution, rows[i].total);
  }
  std::printf("\nefficiency gains of the optimal class member:\n");
  std::printf("  vs t1:  %.4f\n", eff.gain_vs_t1);
  std::printf("  vs t_r: %.4f\n", eff.gain_vs_tr);
  return 0;
}

struct SimulateOptions {
  std::string config;
  std::uint64_t reps = 200000;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  double tol = 0.05;
  bool json = false;
  std::string grid_m2;    // "" = off, "auto" or "lo:hi:step"
  std::string grid_out = "m2_curve.csv";
  std::string dump_reps;  // per-replication CSV
  std::string dump_population;
};

std::vector<double> parse_grid(const std::string& spec, double center) {
  double lo = center - 0.5, hi = center + 0.5, step = 0.01;
  if (!spec.empty() && spec != "auto") {
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
        step <= 0.0 || hi < lo)
      throw hhme::ValidationError("--grid-m2 expects lo:hi:step with step > 0");
  }
  std::vector<double> grid;
  for (double v = lo; v <= hi + 0.5 * step; v += step) grid.push_back(v);
  return grid;
}

int run_simulate(const SimulateOptions& opt) {
  using namespace hhme;
  const ValidatedParameterSet v = validate(load_params(opt.config));
  if (!v.params().N)
    throw ValidationError("simulate requires a finite N in the config");
  const std::uint64_t seed = opt.seed ? *opt.seed : fallback_seed();

  const popgen::PopulationSpec spec = popgen::stratum_specs_from_overall(v);
  const FinitePopulation pop = popgen::generate_population(spec, seed);
  if (!opt.dump_population.empty())
    popgen::dump_population_csv(pop, opt.dump_population);

  montecarlo::RunConfig cfg;
  cfg.reps = opt.reps;
  cfg.seed = seed;
  cfg.workers = opt.workers;
  const MonteCarloReport report = montecarlo::run(pop, v, cfg);

  if (!opt.dump_reps.empty())
    montecarlo::dump_replications_csv(pop, v, cfg, opt.dump_reps);

  if (opt.json)
    std::cout << montecarlo::to_json(report) << "\n";
  else
    std::cout << montecarlo::format_table(report);

  if (!opt.grid_m2.empty()) {
    const double m2_star = theory::m2_opt(v).m2;
    const std::vector<double> grid = parse_grid(opt.grid_m2, m2_star);
    const montecarlo::GridSearchResult gs =
        montecarlo::grid_search_m2(pop, v, cfg, grid);
    std::ofstream curve(opt.grid_out);
    if (!curve)
      throw ValidationError("cannot write grid curve: " + opt.grid_out);
    curve << "m2,empirical_mse,se_mse\n";
    curve.precision(17);
    for (const auto& pt : gs.curve)
      curve << pt.m2 << ',' << pt.empirical_mse << ',' << pt.se_mse << '\n';
    std::printf("\ngrid search: m2_hat = %.4f  (theory m2* = %.6f)  curve -> %s\n",
                gs.m2_hat, m2_star, opt.grid_out.c_str());
  }

  bool tolerance_ok = true;
  for (const EstimatorStats& e : report.estimators)
    if (std::abs(e.rel_deviation) > opt.tol) tolerance_ok = false;
  if (!tolerance_ok) {
    std::fprintf(stderr,
                 "tolerance failure: at least one estimator deviates from "
                 "theory by more than %.2f%%\n",
                 100.0 * opt.tol);
    return 3;
  }
  return 0;
}

struct IngestOptions {
  std::string dataset;
  double k = 2.0;
  bool k_given = false;
  std::optional<double> W2;
  std::string out;
};

int run_ingest(const IngestOptions& opt) {
  using namespace hhme;
  if (!opt.k_given)
    std::fprintf(stderr,
                 "notice: the dataset cannot reveal the subsampling rate k; "
                 "using the default k = %.1f (override with --k)\n",
                 opt.k);
  const ingest::PairedDataset data = ingest::load_dataset(opt.dataset);
  const ingest::IngestResult res = ingest::estimate_parameters(data, opt.k, opt.W2);
  std::cout << to_toml(res.params);
  std::printf("# direct S_y^2 = %.8g, indirect = %.8g\n", res.S_y_sq_direct,
              res.S_y_sq_indirect);
  std::printf("# direct S_x^2 = %.8g, indirect = %.8g\n", res.S_x_sq_direct,
              res.S_x_sq_indirect);
  if (!opt.out.empty()) {
    save_params(res.params, opt.out);
    std::fprintf(stderr, "config written to %s\n", opt.out.c_str());
  }
  return 0;
}

int run_reproduce() {
  const hhme::reproduce::ReproductionReport r = hhme::reproduce::build_report();
  std::cout << hhme::reproduce::render(r);
  return (r.tlr_tp_identical && r.ordering_holds) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-population mean estimation under non-response and "
               "measurement error"};
  app.require_subcommand(1);

  TheoryOptions theory_opt;
  CLI::App* theory_cmd =
      app.add_subcommand("theory", "closed-form MSE table from a config file");
  theory_cmd->add_option("config", theory_opt.config, "parameter config (TOML)")
      ->required();
  theory_cmd->add_flag("--json", theory_opt.json, "emit JSON instead of text");
  theory_cmd->add_flag("--no-decomposition", theory_opt.no_decomposition,
                       "print totals only");

  SimulateOptions sim_opt;
  std::uint64_t seed_arg = 0;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "Monte Carlo verification on a synthetic population");
  sim_cmd->add_option("config", sim_opt.config, "parameter config (TOML); must set N")
      ->required();
  sim_cmd->add_option("--reps", sim_opt.reps, "replication count");
  CLI::Option* seed_flag =
      sim_cmd->add_option("--seed", seed_arg, "master seed (fallback: HHME_SEED)");
  sim_cmd->add_option("--workers", sim_opt.workers, "worker threads (0 = auto)");
  sim_cmd->add_option("--tol", sim_opt.tol,
                      "max |empirical/theory - 1| before exit code 3");
  sim_cmd->add_flag("--json", sim_opt.json, "emit the JSON report");
  sim_cmd->add_option("--grid-m2", sim_opt.grid_m2,
                      "grid-search m2: 'auto' or lo:hi:step")
      ->expected(0, 1)
      ->default_str("auto");
  sim_cmd->add_option("--grid-out", sim_opt.grid_out, "grid curve CSV path");
  sim_cmd->add_option("--dump-reps", sim_opt.dump_reps,
                      "per-replication CSV (first 1e5 rows)");
  sim_cmd->add_option("--dump-population", sim_opt.dump_population,
                      "write the generated population as CSV");

  IngestOptions ing_opt;
  CLI::App* ing_cmd = app.add_subcommand(
      "ingest", "derive a parameter config from a paired true/measured CSV");
  ing_cmd->add_option("dataset", ing_opt.dataset, "CSV dataset path")->required();
  CLI::Option* k_flag =
      ing_cmd->add_option("--k", ing_opt.k, "inverse subsampling fraction");
  double w2_arg = 0.0;
  CLI::Option* w2_flag = ing_cmd->add_option(
      "--w2", w2_arg, "override the non-response weight W2");
  ing_cmd->add_option("--out", ing_opt.out, "write the config to this path");

  CLI::App* rep_cmd = app.add_subcommand(
      "reproduce", "recompute the reference-study comparison table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (theory_cmd->parsed()) return run_theory(theory_opt);
    if (sim_cmd->parsed()) {
      if (seed_flag->count() > 0) sim_opt.seed = seed_arg;
      if (sim_cmd->count("--grid-m2") > 0 && sim_opt.grid_m2.empty())
        sim_opt.grid_m2 = "auto";
      return run_simulate(sim_opt);
    }
    if (ing_cmd->parsed()) {
      ing_opt.k_given = k_flag->count() > 0;
      if (w2_flag->count() > 0) ing_opt.W2 = w2_arg;
      return run_ingest(ing_opt);
    }
    if (rep_cmd->parsed()) return run_reproduce();
  } catch (const hhme::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
