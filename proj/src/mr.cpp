#include "metabal/mr.hpp"

#include "metabal/errors.hpp"

#include <cmath>
#include <unordered_set>

namespace metabal {

MRDataset::MRDataset(std::vector<MRVariant> variants) : variants_(std::move(variants)) {
  std::unordered_set<std::string> seen;
  for (const MRVariant& v : variants_) {
    if (!seen.insert(v.id).second) throw DomainError("duplicate variant id '" + v.id + "'");
    for (double value : {v.mu_xg, v.se_xg, v.mu_yg, v.se_yg}) {
      if (!std::isfinite(value)) throw DomainError("variant '" + v.id + "': non-finite value");
    }
    if (!(v.se_xg > 0.0) || !(v.se_yg > 0.0)) {
      throw DomainError("variant '" + v.id + "': standard errors must be > 0");
    }
  }
}

MRDataset MRDataset::oriented_copy(std::size_t* flipped) const {
  MRDataset out = *this;
  std::size_t count = 0;
  for (MRVariant& v : out.variants_) {
    if (v.mu_xg < 0.0) {
      v.mu_xg = -v.mu_xg;
      v.mu_yg = -v.mu_yg;
      ++count;
    }
  }
  out.oriented_ = true;
  if (flipped) *flipped = count;
  return out;
}

StudySet wald_ratios(const MRDataset& data) {
  std::vector<Study> studies;
  studies.reserve(data.size());
  for (const MRVariant& v : data.variants()) {
    if (v.mu_xg == 0.0) {
      throw DomainError("variant '" + v.id + "': gene-exposure association is zero, Wald ratio undefined");
    }
    studies.push_back(Study{v.id, v.mu_yg / v.mu_xg, v.se_yg / std::abs(v.mu_xg), std::nullopt, true});
  }
  return StudySet(std::move(studies));
}

PooledEstimate ivw(const MRDataset& data, const IntervalOptions& interval) {
  return fixed_effect(wald_ratios(data), interval);
}

PleiotropyEstimate pleiotropy_from_phi(double phi) {
  if (phi > 1.0) return {phi - 1.0};
  return {};
}

MREggerResult mr_egger(const MRDataset& data, const IntervalOptions& interval) {
  MREggerResult out;
  const MRDataset oriented = data.oriented_copy(&out.orientation_flips);
  out.fit = egger_wls(wald_ratios(oriented), PrecisionMetric::inv_se, interval);
  out.pleiotropy = pleiotropy_from_phi(out.fit.phi);
  return out;
}

}  // namespace metabal
