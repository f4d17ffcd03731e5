#include "metabal/pooling.hpp"

#include "metabal/errors.hpp"
#include "metabal/kernels.hpp"
#include "metabal/root_finding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace metabal {

std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::fixed: return "fixed";
    case ModelTag::re_additive_dl: return "re_additive_dl";
    case ModelTag::re_additive_pm: return "re_additive_pm";
    case ModelTag::re_multiplicative: return "re_multiplicative";
    case ModelTag::egger: return "egger";
  }
  return "fixed";
}

std::optional<ModelTag> parse_model_tag(std::string_view text) {
  for (ModelTag tag : {ModelTag::fixed, ModelTag::re_additive_dl, ModelTag::re_additive_pm,
                       ModelTag::re_multiplicative, ModelTag::egger}) {
    if (text == to_string(tag)) return tag;
  }
  return std::nullopt;
}

bool operator==(const PooledEstimate& a, const PooledEstimate& b) {
  return a.mu_hat == b.mu_hat && a.se_mu == b.se_mu && a.ci_low == b.ci_low &&
         a.ci_high == b.ci_high && a.statistic == b.statistic && a.p_value == b.p_value &&
         a.df == b.df && a.interval == b.interval && a.model == b.model &&
         a.weights.size() == b.weights.size() && (a.weights == b.weights).all();
}

namespace {

void require_k(const StudySet& set, std::size_t minimum, const char* what) {
  if (set.k() < minimum) {
    throw DomainError(std::string(what) + " needs at least " + std::to_string(minimum) +
                      " included studies, got " + std::to_string(set.k()));
  }
}

// Weighted mean of the included y under `weights`, with Var = scale / sum(w).
PooledEstimate pooled_from_weights(const StudySet& set, Eigen::ArrayXd weights, double scale,
                                   ModelTag tag, const IntervalOptions& interval) {
  const Eigen::ArrayXd y = set.y();
  PooledEstimate out;
  out.model = tag;
  out.interval = interval;
  out.df = static_cast<double>(set.k()) - 1.0;
  out.mu_hat = kernels::weighted_mean(weights, y);
  // Rounding can leave the mean a hair outside [min y, max y] when all y agree.
  out.mu_hat = std::clamp(out.mu_hat, y.minCoeff(), y.maxCoeff());
  out.se_mu = std::sqrt(scale / weights.sum());
  const Coefficient c = make_coefficient(out.mu_hat, out.se_mu, interval, out.df);
  out.ci_low = c.ci_low;
  out.ci_high = c.ci_high;
  out.statistic = c.statistic;
  out.p_value = c.p_value;
  out.weights = std::move(weights);
  return out;
}

double typical_variance(const Eigen::ArrayXd& w) {
  const double s1 = w.sum();
  const double s2 = w.square().sum();
  return (static_cast<double>(w.size()) - 1.0) / (s1 - s2 / s1);
}

double i_squared(double q, double df) { return q > 0.0 ? std::max(0.0, (q - df) / q) : 0.0; }

}  // namespace

PooledEstimate fixed_effect(const StudySet& set, const IntervalOptions& interval) {
  require_k(set, 1, "fixed-effect pooling");
  return pooled_from_weights(set, set.se().square().inverse(), 1.0, ModelTag::fixed, interval);
}

double cochran_q(const StudySet& set, double mu) {
  if (!std::isfinite(mu)) throw DomainError("cochran_q: mu is not finite");
  return kernels::weighted_ss(set.se().square().inverse(), set.y(), mu);
}

Heterogeneity fixed_heterogeneity(const StudySet& set) {
  require_k(set, 1, "heterogeneity");
  const Eigen::ArrayXd w = set.se().square().inverse();
  const Eigen::ArrayXd y = set.y();
  const double mu = std::clamp(kernels::weighted_mean(w, y), y.minCoeff(), y.maxCoeff());
  Heterogeneity h;
  h.df = static_cast<double>(set.k()) - 1.0;
  h.q = kernels::weighted_ss(w, y, mu);
  h.i2 = i_squared(h.q, h.df);
  if (set.k() >= 2) h.s2_typ = typical_variance(w);
  return h;
}

Heterogeneity dl_tau2(const StudySet& set) {
  require_k(set, 2, "DerSimonian-Laird tau^2");
  const Eigen::ArrayXd w = set.se().square().inverse();
  const double s1 = w.sum();
  const double s2 = w.square().sum();
  const double denom = s1 - s2 / s1;
  if (!(denom > 0.0)) throw DomainError("DerSimonian-Laird tau^2: degenerate weights");

  Heterogeneity h = fixed_heterogeneity(set);
  h.tau2 = std::max(0.0, (h.q - h.df) / denom);
  h.s2_typ = h.df / denom;
  return h;
}

double generalized_q(const StudySet& set, double tau2) {
  if (!(tau2 >= 0.0) || !std::isfinite(tau2)) throw DomainError("generalized Q: tau2 must be >= 0");
  const Eigen::ArrayXd w = kernels::additive_weights(set.se(), tau2);
  const Eigen::ArrayXd y = set.y();
  return kernels::weighted_ss(w, y, kernels::weighted_mean(w, y));
}

PooledEstimate additive_random_effects(const StudySet& set, double tau2, ModelTag tag,
                                       const IntervalOptions& interval) {
  require_k(set, 1, "random-effects pooling");
  if (!(tau2 >= 0.0) || !std::isfinite(tau2)) throw DomainError("tau2 must be >= 0");
  return pooled_from_weights(set, kernels::additive_weights(set.se(), tau2), 1.0, tag, interval);
}

PoolingFit dl_fit(const StudySet& set, const IntervalOptions& interval) {
  Heterogeneity h = dl_tau2(set);
  return {additive_random_effects(set, h.tau2, ModelTag::re_additive_dl, interval), h};
}

PoolingFit pm_fit(const StudySet& set, const IntervalOptions& interval,
                  const PauleMandelOptions& options) {
  require_k(set, 2, "Paule-Mandel fit");
  const double target = static_cast<double>(set.k()) - 1.0;
  const Eigen::ArrayXd y = set.y();
  const Eigen::ArrayXd se = set.se();

  Heterogeneity h = fixed_heterogeneity(set);
  h.s2_typ = typical_variance(se.square().inverse());

  auto excess = [&](double tau2) {
    const Eigen::ArrayXd w = kernels::additive_weights(se, tau2);
    return kernels::weighted_ss(w, y, kernels::weighted_mean(w, y)) - target;
  };

  double tau2 = 0.0;
  if (excess(0.0) > 0.0) {
    const double var_y = (y - y.mean()).square().sum() / target;
    double upper = var_y + se.square().maxCoeff();
    int doublings = 0;
    while (excess(upper) > 0.0) {
      if (++doublings > options.max_doublings) {
        throw SolverError("Paule-Mandel: root not bracketed below tau2 = " + std::to_string(upper));
      }
      upper *= 2.0;
    }
    tau2 = bisect(excess, 0.0, upper, BisectionOptions{options.tau2_tol, options.q_tol});
  }
  h.tau2 = tau2;
  return {additive_random_effects(set, tau2, ModelTag::re_additive_pm, interval), h};
}

PoolingFit multiplicative_fit(const StudySet& set, const IntervalOptions& interval) {
  require_k(set, 2, "multiplicative random-effects fit");
  Heterogeneity h = fixed_heterogeneity(set);
  const double phi = h.q / h.df;
  h.phi = phi;
  return {pooled_from_weights(set, set.se().square().inverse(), phi, ModelTag::re_multiplicative,
                              interval),
          h};
}

}  // namespace metabal
