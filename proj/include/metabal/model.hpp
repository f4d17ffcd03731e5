#pragma once

#include "metabal/egger.hpp"
#include "metabal/inference.hpp"
#include "metabal/pooling.hpp"
#include "metabal/study.hpp"

#include <optional>

namespace metabal {

struct ModelSpec {
  ModelTag tag = ModelTag::fixed;
  PrecisionMetric metric = PrecisionMetric::inv_se;
  IntervalOptions pooled_interval{0.95, IntervalKind::z};
  IntervalOptions egger_interval{0.95, IntervalKind::t};
};

/// Any model's output in one shape. For Egger fits `pooled` carries the
/// adjusted mu with weights 1/s_i^2 and `heterogeneity` carries Q' and phi.
struct ModelFit {
  ModelTag tag = ModelTag::fixed;
  PooledEstimate pooled;
  Heterogeneity heterogeneity;
  std::optional<EggerFit> egger;

  friend bool operator==(const ModelFit&, const ModelFit&) = default;
};

/// Minimum number of included studies the model accepts.
std::size_t minimum_k(ModelTag tag);

ModelFit fit_model(const StudySet& set, const ModelSpec& spec);

ModelFit to_model_fit(const EggerFit& egger, const StudySet& set);

}  // namespace metabal
