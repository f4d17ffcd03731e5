#pragma once

#include "metabal/inference.hpp"
#include "metabal/pooling.hpp"
#include "metabal/study.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace metabal {

/// A study after the potential outcome transform y_i(b0) = y_i - b0 x_i.
/// `precision` is 1/(sqrt(phi) s_i); it is empty when phi == 0.
struct TransformedStudy {
  double y = 0.0;
  std::optional<double> precision;

  bool precision_infinite() const noexcept { return !precision.has_value(); }
  friend bool operator==(const TransformedStudy&, const TransformedStudy&) = default;
};

/// Multiplicative Egger fit y_i = mu + b0 x_i + sqrt(phi) s_i e_i, with x_i
/// the precision regressor (s_i, or 1/n_i under inv_n) and weights 1/s_i^2.
struct EggerFit {
  Coefficient beta0;  // mean bias (intercept on the y/s scale)
  Coefficient mu;     // bias-adjusted effect
  double phi = 0.0;   // Q' / (k - 2)
  double q_prime = 0.0;
  double cov_beta0_mu = 0.0;
  /// Var(mu_hat) times the sample mean of x_i^2. Differs from the exact
  /// least-squares Var(beta0); kept for reporting only.
  double var_beta0_mean_s2 = 0.0;
  std::vector<TransformedStudy> transformed;
  int dof = 0;
  PrecisionMetric metric = PrecisionMetric::inv_se;
  IntervalOptions interval{0.95, IntervalKind::t};

  friend bool operator==(const EggerFit&, const EggerFit&) = default;
};

/// Pearson correlation; empty when either coordinate has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Correlation between y_i and 1/se_i over the included studies (k >= 3).
std::optional<double> asymmetry_correlation(const StudySet& set);

/// Egger regression by weighted least squares (QR on the sqrt-weighted
/// design [1, x]).
EggerFit egger_wls(const StudySet& set, PrecisionMetric metric = PrecisionMetric::inv_se,
                   const IntervalOptions& interval = {0.95, IntervalKind::t});

struct GEstimationOptions {
  double lower = -5.0;  // initial bracket for beta0
  double upper = 5.0;
  int max_expansions = 60;  // symmetric doublings of the bracket; 0 keeps it fixed
  double beta0_tol = 1e-13;
};

/// The G-estimation statistic sum w_i {y_i(b0) - mu}(x_i - mean(x)),
/// w_i = 1/s_i^2, at arbitrary (b0, mu).
double gest_statistic(const StudySet& set, double beta0, double mu,
                      PrecisionMetric metric = PrecisionMetric::inv_se);

/// Egger regression by solving the estimating-equation system directly:
/// mu is profiled as the weighted mean of y_i(b0) and b0 is the root of the
/// G-estimation equation, found by bisection.
EggerFit egger_gest(const StudySet& set, PrecisionMetric metric = PrecisionMetric::inv_se,
                    const IntervalOptions& interval = {0.95, IntervalKind::t},
                    const GEstimationOptions& options = {});

/// Transformed (y, precision) pairs for the included studies of `set`.
/// Throws ContractError if `fit` does not match `set`.
std::vector<TransformedStudy> potential_outcome_view(const EggerFit& fit, const StudySet& set);

}  // namespace metabal
