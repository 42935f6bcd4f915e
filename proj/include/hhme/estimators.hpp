#ifndef HHME_ESTIMATORS_HPP
#define HHME_ESTIMATORS_HPP

#include <cmath>
#include <stdexcept>

#include "hhme/model.hpp"

namespace hhme::estimators {

inline constexpr double kRatioEps = 1e-9;

/// The ratio estimator is undefined when x* is within kRatioEps * |Xbar|
/// of zero; callers flag and exclude such replications.
inline bool ratio_defined(double x_star, double X_bar) {
  return std::abs(x_star) > kRatioEps * std::abs(X_bar);
}

/// t1 = y*, the Hansen-Hurwitz mean itself.
inline double t1(const HHMeans& hh) { return hh.y_star; }

/// t_r = (y*/x*) Xbar.
inline double t_ratio(const HHMeans& hh, double X_bar) {
  if (!ratio_defined(hh.x_star, X_bar))
    throw std::domain_error("ratio-undefined: x* too close to zero");
  return hh.y_star / hh.x_star * X_bar;
}

/// t_lr = y* + b (Xbar - x*).
inline double t_regression(const HHMeans& hh, double X_bar, double b) {
  return hh.y_star + b * (X_bar - hh.x_star);
}

/// t_p = m1 y* + m2 (y*/x*) Xbar. The members (1,0) and (0,1) reproduce t1
/// and t_r exactly; m2 = 0 skips the ratio path so x* = 0 cannot trip it.
inline double t_proposed(const HHMeans& hh, double X_bar, double m1, double m2) {
  if (m2 == 0.0) return m1 * hh.y_star;
  return m1 * hh.y_star + m2 * t_ratio(hh, X_bar);
}

/// All four estimates from one realization with the supplied coefficients.
inline EstimateSet evaluate(const HHMeans& hh, double X_bar, double b, double m1,
                            double m2) {
  EstimateSet e;
  e.t1 = t1(hh);
  e.t_r = t_ratio(hh, X_bar);
  e.t_lr = t_regression(hh, X_bar, b);
  e.t_p = m1 * hh.y_star + m2 * e.t_r;
  e.b_used = b;
  e.m1_used = m1;
  e.m2_used = m2;
  return e;
}

}  // namespace hhme::estimators

#endif  // HHME_ESTIMATORS_HPP
