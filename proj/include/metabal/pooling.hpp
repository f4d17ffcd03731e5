#pragma once

#include "metabal/inference.hpp"
#include "metabal/study.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace metabal {

enum class ModelTag { fixed, re_additive_dl, re_additive_pm, re_multiplicative, egger };

std::string_view to_string(ModelTag tag);
std::optional<ModelTag> parse_model_tag(std::string_view text);

/// Pooled mean with its interval. `weights` holds the active per-study
/// weights for the included studies, in StudySet order.
struct PooledEstimate {
  double mu_hat = 0.0;
  double se_mu = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> statistic;
  std::optional<double> p_value;
  double df = 0.0;  // reference dof when interval.kind == t
  IntervalOptions interval;
  Eigen::ArrayXd weights;
  ModelTag model = ModelTag::fixed;

  Coefficient coefficient() const {
    return {mu_hat, se_mu, ci_low, ci_high, statistic, p_value};
  }
  friend bool operator==(const PooledEstimate& a, const PooledEstimate& b);
};

struct Heterogeneity {
  double q = 0.0;   // Cochran's Q about the fixed-effect mean (Q' for Egger)
  double df = 0.0;  // k - 1, or k - 2 for Egger
  double i2 = 0.0;
  double tau2 = 0.0;
  std::optional<double> phi;
  std::optional<double> s2_typ;

  friend bool operator==(const Heterogeneity&, const Heterogeneity&) = default;
};

struct PoolingFit {
  PooledEstimate estimate;
  Heterogeneity heterogeneity;
};

/// Inverse-variance weighted mean, w_i = 1/se_i^2.
PooledEstimate fixed_effect(const StudySet& set, const IntervalOptions& interval = {});

/// sum (1/se_i^2)(y_i - mu)^2 over the included studies.
double cochran_q(const StudySet& set, double mu);

/// Q, I^2 and s2_typ about the fixed-effect mean; tau2 = 0.
Heterogeneity fixed_heterogeneity(const StudySet& set);

/// Moment estimator of tau^2 with the matching typical within-study variance.
Heterogeneity dl_tau2(const StudySet& set);

/// Generalized Q at a given tau^2, with mu profiled out as the
/// 1/(se^2 + tau2)-weighted mean. Continuous and strictly decreasing in tau2.
double generalized_q(const StudySet& set, double tau2);

struct PauleMandelOptions {
  double tau2_tol = 1e-10;
  double q_tol = 1e-9;      // residual |Q_gen - (k-1)| accepted at termination
  int max_doublings = 64;   // bracket growth cap for the upper end
};

/// Weighted mean under weights 1/(se^2 + tau2) for a fixed tau2.
PooledEstimate additive_random_effects(const StudySet& set, double tau2, ModelTag tag,
                                       const IntervalOptions& interval = {});

PoolingFit dl_fit(const StudySet& set, const IntervalOptions& interval = {});

/// Joint solution of the weight, mean and heterogeneity equations. Returns the
/// boundary solution tau2 = 0 when the generalized Q at zero is at most k-1.
PoolingFit pm_fit(const StudySet& set, const IntervalOptions& interval = {},
                  const PauleMandelOptions& options = {});

/// Fixed-effect mean with variance inflated by phi = Q/(k-1). phi is not
/// clamped at 1.
PoolingFit multiplicative_fit(const StudySet& set, const IntervalOptions& interval = {});

}  // namespace metabal
