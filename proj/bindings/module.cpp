#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "hhme/ingest.hpp"
#include "hhme/model.hpp"
#include "hhme/montecarlo.hpp"
#include "hhme/popgen.hpp"
#include "hhme/reproduce.hpp"
#include "hhme/theory.hpp"

namespace py = pybind11;
using namespace hhme;

namespace {

ParameterSet params_from_dict(const py::dict& d) {
  ParameterSet p;
  p.n = d["n"].cast<std::int64_t>();
  if (d.contains("N") && !d["N"].is_none()) p.N = d["N"].cast<std::int64_t>();
  p.W2 = d["W2"].cast<double>();
  p.k = d["k"].cast<double>();
  p.mu_y = d["mu_y"].cast<double>();
  p.mu_x = d["mu_x"].cast<double>();
  p.S_y = d["S_y"].cast<double>();
  p.S_x = d["S_x"].cast<double>();
  p.rho = d["rho"].cast<double>();
  if (d.contains("S_y2")) p.S_y2 = d["S_y2"].cast<double>();
  if (d.contains("S_x2")) p.S_x2 = d["S_x2"].cast<double>();
  if (d.contains("rho2")) p.rho2 = d["rho2"].cast<double>();
  if (d.contains("mu_y2") && !d["mu_y2"].is_none())
    p.mu_y2 = d["mu_y2"].cast<double>();
  if (d.contains("mu_x2") && !d["mu_x2"].is_none())
    p.mu_x2 = d["mu_x2"].cast<double>();
  if (d.contains("sigma_u_sq")) p.errors.sigma_u_sq = d["sigma_u_sq"].cast<double>();
  if (d.contains("sigma_v_sq")) p.errors.sigma_v_sq = d["sigma_v_sq"].cast<double>();
  if (d.contains("sigma_u2_sq"))
    p.errors.sigma_u2_sq = d["sigma_u2_sq"].cast<double>();
  if (d.contains("sigma_v2_sq"))
    p.errors.sigma_v2_sq = d["sigma_v2_sq"].cast<double>();
  return p;
}

py::dict params_to_dict(const ParameterSet& p) {
  py::dict d;
  d["n"] = p.n;
  if (p.N) d["N"] = *p.N;
  d["W2"] = p.W2;
  d["k"] = p.k;
  d["mu_y"] = p.mu_y;
  d["mu_x"] = p.mu_x;
  d["S_y"] = p.S_y;
  d["S_x"] = p.S_x;
  d["rho"] = p.rho;
  d["S_y2"] = p.S_y2;
  d["S_x2"] = p.S_x2;
  d["rho2"] = p.rho2;
  if (p.mu_y2) d["mu_y2"] = *p.mu_y2;
  if (p.mu_x2) d["mu_x2"] = *p.mu_x2;
  d["sigma_u_sq"] = p.errors.sigma_u_sq;
  d["sigma_v_sq"] = p.errors.sigma_v_sq;
  d["sigma_u2_sq"] = p.errors.sigma_u2_sq;
  d["sigma_v2_sq"] = p.errors.sigma_v2_sq;
  return d;
}

ValidatedParameterSet validated(const py::dict& d) {
  return validate(params_from_dict(d));
}

py::dict decomposition_to_dict(const MseDecomposition& m) {
  py::dict d;
  d["without_error"] = m.without_error;
  d["me_contribution"] = m.me_contribution;
  d["nr_contribution"] = m.nr_contribution;
  d["total"] = m.total;
  d["srs_base"] = m.srs_base();
  return d;
}

py::array_t<double> as_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict report_to_dict(const MonteCarloReport& r) {
  py::dict d;
  d["reps"] = r.reps;
  d["seed"] = r.seed;
  d["n"] = r.n;
  d["ybar_true"] = r.ybar_true;
  d["xbar_true"] = r.xbar_true;
  d["b"] = r.b_used;
  d["m1"] = r.m1_used;
  d["m2"] = r.m2_used;
  d["ratio_undefined"] = r.ratio_undefined;
  py::list ests;
  for (const EstimatorStats& e : r.estimators) {
    py::dict ed;
    ed["name"] = e.name;
    ed["count"] = e.count;
    ed["mean"] = e.empirical_mean;
    ed["bias"] = e.empirical_bias;
    ed["mse"] = e.empirical_mse;
    ed["theory_mse"] = e.theoretical_mse;
    ed["rel_deviation"] = e.rel_deviation;
    ed["se_mean"] = e.se_mean;
    ed["se_mse"] = e.se_mse;
    ests.append(ed);
  }
  d["estimators"] = ests;
  d["design"] = params_to_dict(r.design);
  return d;
}

montecarlo::RunConfig make_config(std::uint64_t reps, std::uint64_t seed,
                                  int workers, std::optional<double> b,
                                  std::optional<double> m2) {
  montecarlo::RunConfig cfg;
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.b = b;
  cfg.m2 = m2;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "finite-population mean estimation under two-phase non-response "
            "subsampling and additive measurement error";

  py::register_exception<ValidationError>(m, "ValidationError");

  // --- parameters and config files ---
  m.def("validate_params",
        [](const py::dict& d) {
          const ValidatedParameterSet v = validated(d);
          py::dict out = params_to_dict(v.params());
          out["R"] = v.R();
          return out;
        },
        py::arg("params"),
        "Check every invariant; returns the parameters with R attached.");
  m.def("params_from_toml",
        [](const std::string& text) { return params_to_dict(parse_params(text)); },
        py::arg("text"));
  m.def("params_to_toml",
        [](const py::dict& d) { return to_toml(params_from_dict(d)); },
        py::arg("params"));
  m.def("load_params",
        [](const std::string& path) { return params_to_dict(load_params(path)); },
        py::arg("path"));
  m.def("save_params",
        [](const py::dict& d, const std::string& path) {
          save_params(params_from_dict(d), path);
        },
        py::arg("params"), py::arg("path"));

  // --- closed-form first-order theory ---
  m.def("derive_moments",
        [](const py::dict& d) {
          const DerivedMoments mo = theory::derive_moments(validated(d));
          py::dict out;
          out["A"] = mo.A;
          out["M"] = mo.M;
          out["Nq"] = mo.Nq;
          out["O"] = mo.O;
          out["R"] = mo.R;
          out["Ee0sq"] = mo.Ee0sq;
          out["Ee1sq"] = mo.Ee1sq;
          out["Ee0e1"] = mo.Ee0e1;
          out["C_y"] = mo.C_y;
          out["C_x"] = mo.C_x;
          out["C_y2"] = mo.C_y2;
          out["C_x2"] = mo.C_x2;
          return out;
        },
        py::arg("params"));
  m.def("mse_t1",
        [](const py::dict& d) { return decomposition_to_dict(theory::mse_t1(validated(d))); },
        py::arg("params"));
  m.def("mse_tr",
        [](const py::dict& d) { return decomposition_to_dict(theory::mse_tr(validated(d))); },
        py::arg("params"));
  m.def("bias_tr",
        [](const py::dict& d) { return theory::bias_tr(validated(d)); },
        py::arg("params"));
  m.def("b_opt", [](const py::dict& d) { return theory::b_opt(validated(d)); },
        py::arg("params"));
  m.def("mse_tlr",
        [](const py::dict& d, double b) { return theory::mse_tlr(validated(d), b); },
        py::arg("params"), py::arg("b"));
  m.def("mse_tlr_min",
        [](const py::dict& d) { return theory::mse_tlr_min(validated(d)); },
        py::arg("params"));
  m.def("mse_tp",
        [](const py::dict& d, double m2) { return theory::mse_tp(validated(d), m2); },
        py::arg("params"), py::arg("m2"));
  m.def("m2_opt",
        [](const py::dict& d) {
          const theory::ClassWeights w = theory::m2_opt(validated(d));
          return py::make_tuple(w.m1, w.m2);
        },
        py::arg("params"));
  m.def("mse_tp_min",
        [](const py::dict& d) { return theory::mse_tp_min(validated(d)); },
        py::arg("params"));
  m.def("efficiency_report",
        [](const py::dict& d) {
          const theory::EfficiencyReport r = theory::efficiency_report(validated(d));
          py::dict out;
          out["gain_vs_t1"] = r.gain_vs_t1;
          out["gain_vs_tr"] = r.gain_vs_tr;
          return out;
        },
        py::arg("params"));
  m.def("variance_hh",
        [](const py::dict& d) { return theory::variance_hh(validated(d)); },
        py::arg("params"));

  // --- populations ---
  py::class_<FinitePopulation>(m, "Population")
      .def_property_readonly("x_true",
                             [](const FinitePopulation& p) { return as_array(p.x_true); })
      .def_property_readonly("y_true",
                             [](const FinitePopulation& p) { return as_array(p.y_true); })
      .def_property_readonly("N1", [](const FinitePopulation& p) { return p.N1; })
      .def_property_readonly("N2", [](const FinitePopulation& p) { return p.N2; })
      .def("__len__", [](const FinitePopulation& p) { return p.size(); })
      .def("moments", [](const FinitePopulation& p) {
        const popgen::PopulationMoments mo = popgen::population_moments(p);
        py::dict out;
        out["N"] = mo.N;
        out["N1"] = mo.N1;
        out["N2"] = mo.N2;
        out["W2"] = mo.W2;
        out["mu_x"] = mo.mu_x;
        out["mu_y"] = mo.mu_y;
        out["S_x"] = mo.S_x;
        out["S_y"] = mo.S_y;
        out["rho"] = mo.rho_defined ? py::object(py::float_(mo.rho)) : py::none();
        out["mu_x2"] = mo.mu_x2;
        out["mu_y2"] = mo.mu_y2;
        out["S_x2"] = mo.S_x2;
        out["S_y2"] = mo.S_y2;
        out["rho2"] = mo.rho2_defined ? py::object(py::float_(mo.rho2)) : py::none();
        return out;
      });

  m.def("generate_population",
        [](const py::dict& d, std::uint64_t seed) {
          const ValidatedParameterSet v = validated(d);
          return popgen::generate_population(popgen::stratum_specs_from_overall(v),
                                             seed);
        },
        py::arg("params"), py::arg("seed"),
        "Build a population whose realized moments match the parameters "
        "exactly; requires finite N and the stratum-2 means.");

  // --- Monte Carlo ---
  m.def("simulate",
        [](const FinitePopulation& pop, const py::dict& d, std::uint64_t reps,
           std::uint64_t seed, int workers, std::optional<double> b,
           std::optional<double> m2) {
          const ValidatedParameterSet v = validated(d);
          const montecarlo::RunConfig cfg = make_config(reps, seed, workers, b, m2);
          MonteCarloReport rep;
          {
            py::gil_scoped_release release;
            rep = montecarlo::run(pop, v, cfg);
          }
          return report_to_dict(rep);
        },
        py::arg("population"), py::arg("params"), py::arg("reps"),
        py::arg("seed"), py::arg("workers") = 0, py::arg("b") = py::none(),
        py::arg("m2") = py::none(),
        "Run reps independent replications; empirical vs theoretical "
        "bias/MSE per estimator. Deterministic given (population, params, "
        "reps, seed) for any worker count.");
  m.def("simulate_json",
        [](const FinitePopulation& pop, const py::dict& d, std::uint64_t reps,
           std::uint64_t seed, int workers) {
          const ValidatedParameterSet v = validated(d);
          const montecarlo::RunConfig cfg =
              make_config(reps, seed, workers, std::nullopt, std::nullopt);
          std::string out;
          {
            py::gil_scoped_release release;
            out = montecarlo::to_json(montecarlo::run(pop, v, cfg));
          }
          return out;
        },
        py::arg("population"), py::arg("params"), py::arg("reps"),
        py::arg("seed"), py::arg("workers") = 0);
  m.def("grid_search_m2",
        [](const FinitePopulation& pop, const py::dict& d,
           const std::vector<double>& grid, std::uint64_t reps,
           std::uint64_t seed, int workers) {
          const ValidatedParameterSet v = validated(d);
          const montecarlo::RunConfig cfg =
              make_config(reps, seed, workers, std::nullopt, std::nullopt);
          montecarlo::GridSearchResult gs;
          {
            py::gil_scoped_release release;
            gs = montecarlo::grid_search_m2(pop, v, cfg, grid);
          }
          py::dict out;
          out["m2_hat"] = gs.m2_hat;
          out["count"] = gs.count;
          out["ratio_undefined"] = gs.ratio_undefined;
          py::list curve;
          for (const montecarlo::GridPoint& pt : gs.curve) {
            py::dict pd;
            pd["m2"] = pt.m2;
            pd["mse"] = pt.empirical_mse;
            pd["se_mse"] = pt.se_mse;
            curve.append(pd);
          }
          out["curve"] = curve;
          return out;
        },
        py::arg("population"), py::arg("params"), py::arg("grid"),
        py::arg("reps"), py::arg("seed"), py::arg("workers") = 0,
        "Empirical MSE of the class member over an m2 grid with common "
        "random numbers.");

  // --- ingestion ---
  m.def("estimate_parameters_csv",
        [](const std::string& path, double k, std::optional<double> W2) {
          const ingest::IngestResult res =
              ingest::estimate_parameters(ingest::load_dataset(path), k, W2);
          py::dict out = params_to_dict(res.params);
          out["S_y_sq_direct"] = res.S_y_sq_direct;
          out["S_y_sq_indirect"] = res.S_y_sq_indirect;
          out["S_x_sq_direct"] = res.S_x_sq_direct;
          out["S_x_sq_indirect"] = res.S_x_sq_indirect;
          return out;
        },
        py::arg("path"), py::arg("k"), py::arg("W2") = py::none(),
        "Derive a parameter set from a paired true/measured CSV.");

  // --- reference-study reproduction ---
  m.def("reproduce_report", [] { return reproduce::render(reproduce::build_report()); });
  m.def("reference_parameters", [] {
    return params_to_dict(reproduce::reference_parameters_with_assumptions());
  });
}
