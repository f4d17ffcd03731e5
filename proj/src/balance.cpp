#include "metabal/balance.hpp"

#include "metabal/errors.hpp"

#include <algorithm>
#include <cmath>

namespace metabal {

bool operator==(const BalanceState& a, const BalanceState& b) {
  if (!(a.model == b.model && a.masses == b.masses && a.pivot == b.pivot &&
        a.stand_low == b.stand_low && a.stand_high == b.stand_high &&
        a.torque_residual == b.torque_residual)) {
    return false;
  }
  if (!a.ghost || !b.ghost) return !a.ghost && !b.ghost;
  return *a.ghost == *b.ghost;
}

namespace {

bool additive(ModelTag tag) {
  return tag == ModelTag::re_additive_dl || tag == ModelTag::re_additive_pm;
}

void finish(BalanceState& state) {
  double total = 0.0;
  for (const BalanceMass& m : state.masses) total += m.weight;
  double torque = 0.0;
  for (BalanceMass& m : state.masses) {
    if (m.excluded) continue;
    m.mass_pct = 100.0 * m.weight / total;
    torque += m.weight * (m.x - state.pivot);
  }
  state.torque_residual = torque;
}

}  // namespace

BalanceState build_balance(const StudySet& set, const PooledEstimate& result,
                           const Heterogeneity& heterogeneity) {
  if (result.model == ModelTag::egger) {
    throw ContractError("Egger results must be balanced from their EggerFit");
  }
  if (static_cast<std::size_t>(result.weights.size()) != set.k()) {
    throw ContractError("result has " + std::to_string(result.weights.size()) +
                        " weights, dataset has " + std::to_string(set.k()) + " included studies");
  }
  const bool drilled = additive(result.model);
  const double tau2 = drilled ? heterogeneity.tau2 : 0.0;
  const double phi = result.model == ModelTag::re_multiplicative ? heterogeneity.phi.value_or(1.0) : 1.0;

  BalanceState state;
  state.model = result.model;
  state.pivot = result.mu_hat;
  state.stand_low = result.ci_low;
  state.stand_high = result.ci_high;

  const auto& included = set.included_indices();
  std::size_t j = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Study& s = set.studies()[i];
    BalanceMass m;
    m.id = s.id;
    m.x = s.y;
    const double s2 = s.se * s.se;
    if (j < included.size() && included[j] == i) {
      const double expected = 1.0 / (s2 + tau2);
      const double w = result.weights[static_cast<Eigen::Index>(j)];
      if (std::abs(w - expected) > 1e-12 * expected) {
        throw ContractError("weights for study '" + s.id + "' do not match the dataset and model");
      }
      m.weight = w;
      m.hole_len = drilled ? std::sqrt(tau2 / (s2 * (s2 + tau2))) : 0.0;
      if (phi > 0.0) m.height = 1.0 / std::sqrt(phi * (s2 + tau2));
      ++j;
    } else {
      m.excluded = true;
      m.height = 1.0 / s.se;
    }
    state.masses.push_back(std::move(m));
  }
  finish(state);

  double scale = 0.0;
  for (const BalanceMass& m : state.masses) scale += m.weight * std::abs(m.x);
  if (std::abs(state.torque_residual) > 1e-8 * std::max(scale, 1e-300)) {
    throw ContractError("pooled estimate does not balance this dataset");
  }
  return state;
}

BalanceState build_balance(const StudySet& set, const EggerFit& fit) {
  const std::vector<TransformedStudy> view = potential_outcome_view(fit, set);

  BalanceState state;
  state.model = ModelTag::egger;
  state.pivot = fit.mu.estimate;
  state.stand_low = fit.mu.ci_low;
  state.stand_high = fit.mu.ci_high;

  const auto& included = set.included_indices();
  std::size_t j = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Study& s = set.studies()[i];
    BalanceMass m;
    m.id = s.id;
    if (j < included.size() && included[j] == i) {
      m.x = view[j].y;
      m.height = view[j].precision;
      m.weight = 1.0 / (s.se * s.se);
      ++j;
    } else {
      m.excluded = true;
      double regressor = s.se;
      if (fit.metric == PrecisionMetric::inv_n) regressor = s.n ? 1.0 / *s.n : 0.0;
      m.x = s.y - fit.beta0.estimate * regressor;
      m.height = 1.0 / s.se;
    }
    state.masses.push_back(std::move(m));
  }
  finish(state);
  return state;
}

BalanceState build_balance(const StudySet& set, const ModelFit& fit) {
  if (fit.egger) return build_balance(set, *fit.egger);
  return build_balance(set, fit.pooled, fit.heterogeneity);
}

BalanceState with_ghost(BalanceState current, const BalanceState& previous) {
  auto ghost = std::make_shared<BalanceState>(previous);
  ghost->ghost.reset();
  current.ghost = std::move(ghost);
  return current;
}

std::vector<LeaveOneOutEntry> leave_one_out(const StudySet& set, const ModelSpec& spec) {
  const std::size_t needed = spec.tag == ModelTag::egger ? 4 : 2;
  if (set.k() < needed) {
    throw DomainError("leave-one-out needs at least " + std::to_string(needed) +
                      " included studies, got " + std::to_string(set.k()));
  }
  std::vector<LeaveOneOutEntry> out;
  out.reserve(set.k());
  for (std::size_t i : set.included_indices()) {
    LeaveOneOutEntry entry;
    entry.excluded_id = set.studies()[i].id;
    const StudySet reduced = set.excluding({entry.excluded_id});
    try {
      entry.fit = fit_model(reduced, spec);
    } catch (const DomainError& e) {
      entry.error = e.what();
    } catch (const RegressionError& e) {
      entry.error = e.what();
    } catch (const SolverError& e) {
      entry.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace metabal
