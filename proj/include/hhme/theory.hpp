#ifndef HHME_THEORY_HPP
#define HHME_THEORY_HPP

#include "hhme/model.hpp"

namespace hhme::theory {

/// First-order moment machinery shared by every estimator:
///   A  = (k-1) W2 / n
///   M  = (S_y^2 + sigma_u^2)/n          + A (S_y2^2 + sigma_u2^2)
///   Nq = (S_x^2 + sigma_v^2)/n          + A (S_x2^2 + sigma_v2^2)
///   O  = rho S_x S_y / n                + A rho2 S_x2 S_y2
/// The additive forms above equal the (1 + sigma^2/S^2) product forms
/// whenever S > 0 and stay defined at S = 0.
/// e-moments: Ee0sq = M/mu_y^2, Ee1sq = R^2 Nq / mu_y^2, Ee0e1 = R O / mu_y^2.
DerivedMoments derive_moments(const ValidatedParameterSet& params);

/// MSE of the Hansen-Hurwitz mean t1; its bias is exactly zero.
MseDecomposition mse_t1(const ValidatedParameterSet& params);

/// First-order bias of the ratio estimator: (R Nq - O) / mu_x.
double bias_tr(const ValidatedParameterSet& params);

/// MSE of the ratio estimator: M + R^2 Nq - 2 R O.
MseDecomposition mse_tr(const ValidatedParameterSet& params);

/// Optimal regression slope b* = O / Nq. With no errors and W2 = 0 this is
/// the classical rho S_y / S_x.
double b_opt(const ValidatedParameterSet& params);

/// MSE of the regression estimator at slope b: M + b^2 Nq - 2 b O.
double mse_tlr(const ValidatedParameterSet& params, double b);

/// Minimum over b: M - O^2 / Nq.
double mse_tlr_min(const ValidatedParameterSet& params);

/// Decomposition columns for the regression estimator with b held fixed.
MseDecomposition mse_tlr_decomposition(const ValidatedParameterSet& params, double b);

/// MSE of the class member t_p(m2) = (1-m2) y* + m2 (y*/x*) Xbar:
/// M + m2^2 R^2 Nq - 2 m2 R O.
double mse_tp(const ValidatedParameterSet& params, double m2);

/// Optimal class weights: m2* = O / (R Nq), m1* = 1 - m2*.
struct ClassWeights {
  double m1 = 0.0;
  double m2 = 0.0;
};
ClassWeights m2_opt(const ValidatedParameterSet& params);

/// Minimum over m2: M - O^2 / Nq. Identical to mse_tlr_min by construction.
double mse_tp_min(const ValidatedParameterSet& params);

/// Decomposition columns for the class member at fixed m2.
MseDecomposition mse_tp_decomposition(const ValidatedParameterSet& params, double m2);

/// MSE gains of the optimal class member over t1 and t_r. Both are squares
/// over Nq and therefore nonnegative for every valid parameter set.
struct EfficiencyReport {
  double gain_vs_t1 = 0.0;  // O^2 / Nq
  double gain_vs_tr = 0.0;  // (R Nq - O)^2 / Nq
  bool better_than_t1 = false;
  bool better_than_tr = false;
};
EfficiencyReport efficiency_report(const ValidatedParameterSet& params);

/// Classical error-free Hansen-Hurwitz variance including the finite
/// population correction: (1-f)/n S_y^2 + W2(k-1)/n S_y2^2, f = n/N.
/// Requires finite N; used to cross-check the simulator at sigma = 0.
double variance_hh(const ValidatedParameterSet& params);

}  // namespace hhme::theory

#endif  // HHME_THEORY_HPP
