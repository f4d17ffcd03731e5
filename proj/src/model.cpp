#include "metabal/model.hpp"

#include <algorithm>

namespace metabal {

std::size_t minimum_k(ModelTag tag) {
  switch (tag) {
    case ModelTag::fixed: return 1;
    case ModelTag::egger: return 3;
    default: return 2;
  }
}

ModelFit to_model_fit(const EggerFit& egger, const StudySet& set) {
  ModelFit out;
  out.tag = ModelTag::egger;
  PooledEstimate& p = out.pooled;
  p.model = ModelTag::egger;
  p.mu_hat = egger.mu.estimate;
  p.se_mu = egger.mu.se;
  p.ci_low = egger.mu.ci_low;
  p.ci_high = egger.mu.ci_high;
  p.statistic = egger.mu.statistic;
  p.p_value = egger.mu.p_value;
  p.df = egger.dof;
  p.interval = egger.interval;
  p.weights = set.se().square().inverse();

  Heterogeneity& h = out.heterogeneity;
  h.q = egger.q_prime;
  h.df = egger.dof;
  h.i2 = h.q > 0.0 ? std::max(0.0, (h.q - h.df) / h.q) : 0.0;
  h.phi = egger.phi;
  out.egger = egger;
  return out;
}

ModelFit fit_model(const StudySet& set, const ModelSpec& spec) {
  auto wrap = [&](PoolingFit fit) {
    return ModelFit{spec.tag, std::move(fit.estimate), fit.heterogeneity, std::nullopt};
  };
  switch (spec.tag) {
    case ModelTag::fixed:
      return ModelFit{ModelTag::fixed, fixed_effect(set, spec.pooled_interval),
                      fixed_heterogeneity(set), std::nullopt};
    case ModelTag::re_additive_dl:
      return wrap(dl_fit(set, spec.pooled_interval));
    case ModelTag::re_additive_pm:
      return wrap(pm_fit(set, spec.pooled_interval));
    case ModelTag::re_multiplicative:
      return wrap(multiplicative_fit(set, spec.pooled_interval));
    case ModelTag::egger:
      return to_model_fit(egger_wls(set, spec.metric, spec.egger_interval), set);
  }
  return {};
}

}  // namespace metabal
