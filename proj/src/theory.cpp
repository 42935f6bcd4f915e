#include "hhme/theory.hpp"

#include <cmath>

namespace hhme::theory {

namespace {

// Moment triple with selected contributions switched off; the workhorse
// behind every decomposition column.
struct Terms {
  double M, Nq, O;
};

Terms terms(const ValidatedParameterSet& v, bool with_errors, bool with_nonresponse) {
  const ParameterSet& p = v.params();
  const double n = static_cast<double>(p.n);
  const double A = with_nonresponse ? (p.k - 1.0) * p.W2 / n : 0.0;
  const double su = with_errors ? p.errors.sigma_u_sq : 0.0;
  const double sv = with_errors ? p.errors.sigma_v_sq : 0.0;
  const double su2 = with_errors ? p.errors.sigma_u2_sq : 0.0;
  const double sv2 = with_errors ? p.errors.sigma_v2_sq : 0.0;
  Terms t;
  t.M = (p.S_y * p.S_y + su) / n + A * (p.S_y2 * p.S_y2 + su2);
  t.Nq = (p.S_x * p.S_x + sv) / n + A * (p.S_x2 * p.S_x2 + sv2);
  t.O = p.rho * p.S_x * p.S_y / n + A * p.rho2 * p.S_x2 * p.S_y2;
  return t;
}

MseDecomposition decompose(double full, double no_error, double srs) {
  MseDecomposition d;
  d.total = full;
  d.without_error = no_error;
  d.me_contribution = full - no_error;
  d.nr_contribution = no_error - srs;
  return d;
}

}  // namespace

DerivedMoments derive_moments(const ValidatedParameterSet& v) {
  const ParameterSet& p = v.params();
  const Terms t = terms(v, true, true);
  DerivedMoments m;
  m.A = (p.k - 1.0) * p.W2 / static_cast<double>(p.n);
  m.M = t.M;
  m.Nq = t.Nq;
  m.O = t.O;
  m.R = v.R();
  const double ybar_sq = p.mu_y * p.mu_y;
  m.Ee0sq = m.M / ybar_sq;
  m.Ee1sq = m.R * m.R * m.Nq / ybar_sq;
  m.Ee0e1 = m.R * m.O / ybar_sq;
  m.C_y = p.S_y / p.mu_y;
  m.C_x = p.S_x / p.mu_x;
  m.C_y2 = p.S_y2 / p.mu_y;
  m.C_x2 = p.S_x2 / p.mu_x;
  return m;
}

MseDecomposition mse_t1(const ValidatedParameterSet& v) {
  return decompose(terms(v, true, true).M, terms(v, false, true).M,
                   terms(v, false, false).M);
}

double bias_tr(const ValidatedParameterSet& v) {
  const Terms t = terms(v, true, true);
  return (v.R() * t.Nq - t.O) / v.mu_x();
}

namespace {
double ratio_mse(const Terms& t, double R) {
  return t.M + R * R * t.Nq - 2.0 * R * t.O;
}
}  // namespace

MseDecomposition mse_tr(const ValidatedParameterSet& v) {
  const double R = v.R();
  return decompose(ratio_mse(terms(v, true, true), R),
                   ratio_mse(terms(v, false, true), R),
                   ratio_mse(terms(v, false, false), R));
}

double b_opt(const ValidatedParameterSet& v) {
  const Terms t = terms(v, true, true);
  if (!(t.Nq > 0.0)) throw ValidationError("no auxiliary variation (Nq = 0)");
  return t.O / t.Nq;
}

namespace {
double regression_mse(const Terms& t, double b) {
  return t.M + b * b * t.Nq - 2.0 * b * t.O;
}
}  // namespace

double mse_tlr(const ValidatedParameterSet& v, double b) {
  return regression_mse(terms(v, true, true), b);
}

double mse_tlr_min(const ValidatedParameterSet& v) {
  const Terms t = terms(v, true, true);
  if (!(t.Nq > 0.0)) throw ValidationError("no auxiliary variation (Nq = 0)");
  return t.M - t.O * t.O / t.Nq;
}

MseDecomposition mse_tlr_decomposition(const ValidatedParameterSet& v, double b) {
  return decompose(regression_mse(terms(v, true, true), b),
                   regression_mse(terms(v, false, true), b),
                   regression_mse(terms(v, false, false), b));
}

double mse_tp(const ValidatedParameterSet& v, double m2) {
  const Terms t = terms(v, true, true);
  const double R = v.R();
  return t.M + m2 * m2 * R * R * t.Nq - 2.0 * m2 * R * t.O;
}

ClassWeights m2_opt(const ValidatedParameterSet& v) {
  const Terms t = terms(v, true, true);
  if (!(t.Nq > 0.0)) throw ValidationError("no auxiliary variation (Nq = 0)");
  ClassWeights w;
  w.m2 = t.O / (v.R() * t.Nq);
  w.m1 = 1.0 - w.m2;
  return w;
}

double mse_tp_min(const ValidatedParameterSet& v) { return mse_tlr_min(v); }

MseDecomposition mse_tp_decomposition(const ValidatedParameterSet& v, double m2) {
  const double R = v.R();
  const auto eval = [&](const Terms& t) {
    return t.M + m2 * m2 * R * R * t.Nq - 2.0 * m2 * R * t.O;
  };
  return decompose(eval(terms(v, true, true)), eval(terms(v, false, true)),
                   eval(terms(v, false, false)));
}

EfficiencyReport efficiency_report(const ValidatedParameterSet& v) {
  const Terms t = terms(v, true, true);
  EfficiencyReport r;
  r.gain_vs_t1 = t.O * t.O / t.Nq;
  const double d = v.R() * t.Nq - t.O;
  r.gain_vs_tr = d * d / t.Nq;
  r.better_than_t1 = r.gain_vs_t1 >= 0.0;
  r.better_than_tr = r.gain_vs_tr >= 0.0;
  return r;
}

double variance_hh(const ValidatedParameterSet& v) {
  const ParameterSet& p = v.params();
  if (!p.N) throw ValidationError("variance_hh requires finite N");
  const double n = static_cast<double>(p.n);
  const double f = n / static_cast<double>(*p.N);
  return (1.0 - f) / n * p.S_y * p.S_y + p.W2 * (p.k - 1.0) / n * p.S_y2 * p.S_y2;
}

}  // namespace hhme::theory
