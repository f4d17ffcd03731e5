#pragma once

#include "metabal/egger.hpp"
#include "metabal/pooling.hpp"
#include "metabal/study.hpp"

#include <optional>
#include <string>
#include <vector>

namespace metabal {

/// Per-variant summary associations: gene-exposure (mu_xg) and gene-outcome
/// (mu_yg), each with its standard error.
struct MRVariant {
  std::string id;
  double mu_xg = 0.0;
  double se_xg = 1.0;
  double mu_yg = 0.0;
  double se_yg = 1.0;

  friend bool operator==(const MRVariant&, const MRVariant&) = default;
};

/// Variants with unique ids and positive, finite standard errors. Zero
/// gene-exposure associations are accepted here and rejected when forming
/// Wald ratios.
class MRDataset {
 public:
  MRDataset() = default;
  explicit MRDataset(std::vector<MRVariant> variants);

  const std::vector<MRVariant>& variants() const noexcept { return variants_; }
  std::size_t size() const noexcept { return variants_.size(); }
  bool oriented() const noexcept { return oriented_; }

  /// Copy with every variant flipped so mu_xg > 0; `flipped` counts the
  /// variants whose signs changed.
  MRDataset oriented_copy(std::size_t* flipped = nullptr) const;

  friend bool operator==(const MRDataset& a, const MRDataset& b) {
    return a.variants_ == b.variants_ && a.oriented_ == b.oriented_;
  }

 private:
  std::vector<MRVariant> variants_;
  bool oriented_ = false;
};

/// y_i = mu_yg / mu_xg, se_i = se_yg / |mu_xg| (first order; se_xg unused).
StudySet wald_ratios(const MRDataset& data);

/// Inverse-variance weighted estimate: the fixed-effect mean of the ratios.
PooledEstimate ivw(const MRDataset& data, const IntervalOptions& interval = {});

/// sigma^2_beta0 = phi - 1, identified only when phi > 1.
struct PleiotropyEstimate {
  std::optional<double> sigma2_beta0;

  bool identified() const noexcept { return sigma2_beta0.has_value(); }
  friend bool operator==(const PleiotropyEstimate&, const PleiotropyEstimate&) = default;
};

PleiotropyEstimate pleiotropy_from_phi(double phi);

struct MREggerResult {
  EggerFit fit;
  PleiotropyEstimate pleiotropy;
  std::size_t orientation_flips = 0;
};

MREggerResult mr_egger(const MRDataset& data,
                       const IntervalOptions& interval = {0.95, IntervalKind::t});

}  // namespace metabal
