#ifndef HHME_MODEL_HPP
#define HHME_MODEL_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhme {

/// Raised by validate() and by the config/dataset parsers. The message names
/// the first offending field or file location.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Additive measurement-error variances, one pair per response stratum.
/// u errors act on the study variable Y, v errors on the auxiliary X;
/// the "2" suffix marks the non-response stratum.
struct ErrorModel {
  double sigma_u_sq = 0.0;
  double sigma_v_sq = 0.0;
  double sigma_u2_sq = 0.0;
  double sigma_v2_sq = 0.0;

  bool all_zero() const {
    return sigma_u_sq == 0.0 && sigma_v_sq == 0.0 && sigma_u2_sq == 0.0 &&
           sigma_v2_sq == 0.0;
  }
};

/// Design and population parameters driving every MSE formula.
///
/// N is optional: the first-order formulas ignore the finite population
/// correction, so only operations that must realize a concrete population
/// (popgen, simulate) insist on it. mu_y2/mu_x2 are likewise only needed to
/// construct populations, never by the theory formulas.
struct ParameterSet {
  std::int64_t n = 0;                    // sample size
  std::optional<std::int64_t> N;         // population size; absent = infinite
  double W2 = 0.0;                       // non-response stratum weight
  double k = 1.0;                        // inverse subsampling fraction
  double mu_y = 0.0, mu_x = 0.0;         // population means
  double S_y = 0.0, S_x = 0.0;           // population SDs (divisor N-1)
  double rho = 0.0;                      // overall correlation
  double S_y2 = 0.0, S_x2 = 0.0;         // non-response stratum SDs
  double rho2 = 0.0;                     // non-response stratum correlation
  std::optional<double> mu_y2, mu_x2;    // non-response stratum means
  ErrorModel errors;
};

/// A ParameterSet that passed validate(), with the derived ratio R = mu_y/mu_x
/// attached. Construction is only possible through validate().
class ValidatedParameterSet {
 public:
  const ParameterSet& params() const { return p_; }
  double R() const { return R_; }

  // forwarding accessors for the fields the formulas use constantly
  std::int64_t n() const { return p_.n; }
  double W2() const { return p_.W2; }
  double k() const { return p_.k; }
  double mu_y() const { return p_.mu_y; }
  double mu_x() const { return p_.mu_x; }
  double S_y() const { return p_.S_y; }
  double S_x() const { return p_.S_x; }
  double rho() const { return p_.rho; }
  double S_y2() const { return p_.S_y2; }
  double S_x2() const { return p_.S_x2; }
  double rho2() const { return p_.rho2; }
  const ErrorModel& errors() const { return p_.errors; }

 private:
  friend ValidatedParameterSet validate(const ParameterSet&);
  ValidatedParameterSet(ParameterSet p, double R) : p_(std::move(p)), R_(R) {}
  ParameterSet p_;
  double R_;
};

/// Checks every ParameterSet invariant; throws ValidationError naming the
/// first violated one. On success attaches R = mu_y/mu_x.
ValidatedParameterSet validate(const ParameterSet& p);

/// N units with true values and a fixed response/non-response label.
/// Stratum labels are 1 (respondent) and 2 (non-respondent). Immutable by
/// convention once built.
struct FinitePopulation {
  std::vector<double> x_true;
  std::vector<double> y_true;
  std::vector<std::uint8_t> stratum;  // values 1 or 2
  std::int64_t N1 = 0;
  std::int64_t N2 = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(y_true.size()); }
  double W1() const { return static_cast<double>(N1) / static_cast<double>(size()); }
  double W2() const { return static_cast<double>(N2) / static_cast<double>(size()); }

  /// Mean of the true study values over the whole population.
  double ybar() const;
  double xbar() const;
  /// Stratum mean of true y (s = 1 or 2); throws if the stratum is empty.
  double stratum_ybar(int s) const;
  double stratum_xbar(int s) const;
  /// Stratum variance of true y, divisor (size-1); throws if size < 2.
  double stratum_var_y(int s) const;
  double stratum_var_x(int s) const;

  /// Internal-consistency check (label counts vs N1/N2); throws on violation.
  void check() const;
};

/// One two-phase draw: first-phase sample, response split, re-interview
/// subsample, and the error-contaminated observations.
struct SampleRealization {
  std::vector<std::int64_t> sample_idx;
  std::vector<std::int64_t> respondent_idx;
  std::vector<std::int64_t> nonrespondent_idx;
  std::vector<std::int64_t> subsample_idx;
  std::vector<double> y_obs_resp, x_obs_resp;
  std::vector<double> y_obs_sub, x_obs_sub;
  std::int64_t n1 = 0, n2 = 0, r = 0;
  double w1 = 0.0, w2 = 0.0;

  double ybar1() const;
  double xbar1() const;
  double ybar2r() const;
  double xbar2r() const;
};

struct HHMeans {
  double y_star = 0.0;
  double x_star = 0.0;
};

/// The four point estimates from one realization plus the coefficients used.
struct EstimateSet {
  double t1 = 0.0;
  double t_r = 0.0;
  double t_lr = 0.0;
  double t_p = 0.0;
  double b_used = 0.0;
  double m1_used = 0.0;
  double m2_used = 0.0;
};

/// Scalar quantities shared by every first-order MSE formula.
/// Nq is the auxiliary quadratic term (in X^2 units); the name avoids the
/// symbol collision with the population size.
struct DerivedMoments {
  double A = 0.0;      // non-response inflation (k-1)W2/n
  double M = 0.0;      // MSE(t1), Y^2 units
  double Nq = 0.0;     // auxiliary quadratic term, X^2 units
  double O = 0.0;      // cross term, X*Y units
  double R = 0.0;      // mu_y / mu_x
  double Ee0sq = 0.0;  // relative-error second moments
  double Ee1sq = 0.0;
  double Ee0e1 = 0.0;
  double C_y = 0.0, C_x = 0.0, C_y2 = 0.0, C_x2 = 0.0;
};

/// Additive split of an MSE into a pure-SRS base, a non-response part and a
/// measurement-error part.
///
/// Convention (fixed project-wide):
///   without_error   = formula with all four error variances zeroed,
///                     non-response retained;
///   me_contribution = total - without_error;
///   nr_contribution = without_error - value at W2 = 0 (errors still zeroed);
///   srs_base()      = without_error - nr_contribution.
/// Hence total = srs_base() + nr_contribution + me_contribution exactly.
struct MseDecomposition {
  double without_error = 0.0;
  double me_contribution = 0.0;
  double nr_contribution = 0.0;
  double total = 0.0;

  double srs_base() const { return without_error - nr_contribution; }
};

/// Empirical result for one estimator inside a MonteCarloReport.
struct EstimatorStats {
  std::string name;
  std::int64_t count = 0;
  double empirical_mean = 0.0;
  double empirical_bias = 0.0;
  double empirical_mse = 0.0;
  double theoretical_mse = 0.0;
  double rel_deviation = 0.0;  // empirical/theoretical - 1
  double se_mean = 0.0;        // Monte Carlo standard errors
  double se_mse = 0.0;
};

struct MonteCarloReport {
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  double ybar_true = 0.0;
  double xbar_true = 0.0;
  double b_used = 0.0;
  double m1_used = 0.0;
  double m2_used = 0.0;
  std::int64_t ratio_undefined = 0;
  std::vector<EstimatorStats> estimators;  // t1, t_r, t_lr, t_p
  ParameterSet design;
};

// --- Flat key/value config (TOML) ------------------------------------------
//
// Keys: n, N, W2, k, mu_y, mu_x, S_y, S_x, rho, S_y2, S_x2, rho2, mu_y2,
// mu_x2, sigma_u_sq, sigma_v_sq, sigma_u2_sq, sigma_v2_sq. Optional keys may
// be omitted. '#' starts a comment. Serialization round-trips bit-exactly.

ParameterSet parse_params(const std::string& text);
ParameterSet load_params(const std::string& path);
std::string to_toml(const ParameterSet& p);
void save_params(const ParameterSet& p, const std::string& path);

}  // namespace hhme

#endif  // HHME_MODEL_HPP
