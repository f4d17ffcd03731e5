#pragma once

#include "metabal/egger.hpp"
#include "metabal/model.hpp"
#include "metabal/pooling.hpp"
#include "metabal/study.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace metabal {

/// One mass on the balance.
struct BalanceMass {
  std::string id;
  double x = 0.0;                 // y_i, or y_i(b0) for Egger views
  std::optional<double> height;   // precision on the active scale; empty = infinite
  double weight = 0.0;            // active weight (0 when excluded)
  double mass_pct = 0.0;          // 100 w_i / sum w
  double hole_len = 0.0;          // side of the drilled square
  bool excluded = false;

  friend bool operator==(const BalanceMass&, const BalanceMass&) = default;
};

/// The physical rendering model: masses hang at their x positions, the pole
/// balances at `pivot`, and the stand spans the confidence interval.
struct BalanceState {
  ModelTag model = ModelTag::fixed;
  std::vector<BalanceMass> masses;
  double pivot = 0.0;
  double stand_low = 0.0;
  double stand_high = 0.0;
  double torque_residual = 0.0;
  /// Previous state for exclusion/model-change comparison.
  std::shared_ptr<const BalanceState> ghost;

  double stand_width() const noexcept { return stand_high - stand_low; }
  friend bool operator==(const BalanceState& a, const BalanceState& b);
};

BalanceState build_balance(const StudySet& set, const PooledEstimate& result,
                           const Heterogeneity& heterogeneity);
BalanceState build_balance(const StudySet& set, const EggerFit& fit);
BalanceState build_balance(const StudySet& set, const ModelFit& fit);

/// Copy of `current` with `previous` attached as its ghost (the ghost's own
/// ghost is dropped).
BalanceState with_ghost(BalanceState current, const BalanceState& previous);

struct LeaveOneOutEntry {
  std::string excluded_id;
  std::optional<ModelFit> fit;
  std::optional<std::string> error;  // set when the reduced set cannot be fitted
};

/// Refits `spec` once per included study with that study removed.
std::vector<LeaveOneOutEntry> leave_one_out(const StudySet& set, const ModelSpec& spec);

}  // namespace metabal
