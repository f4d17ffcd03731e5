#include "metabal/study.hpp"

#include "metabal/errors.hpp"

#include <cmath>
#include <unordered_set>

namespace metabal {

std::string_view to_string(PrecisionMetric metric) {
  return metric == PrecisionMetric::inv_se ? "inv_se" : "inv_n";
}

std::optional<PrecisionMetric> parse_precision_metric(std::string_view text) {
  if (text == "inv_se") return PrecisionMetric::inv_se;
  if (text == "inv_n") return PrecisionMetric::inv_n;
  return std::nullopt;
}

StudySet::StudySet(std::vector<Study> studies) : studies_(std::move(studies)) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < studies_.size(); ++i) {
    const Study& s = studies_[i];
    if (!seen.insert(s.id).second) throw DomainError("duplicate study id '" + s.id + "'");
    if (!std::isfinite(s.y)) throw DomainError("study '" + s.id + "': y is not finite");
    if (!std::isfinite(s.se)) throw DomainError("study '" + s.id + "': se is not finite");
    if (!(s.se > 0.0)) throw DomainError("study '" + s.id + "': se must be > 0");
    if (s.n && !(std::isfinite(*s.n) && *s.n > 0.0)) {
      throw DomainError("study '" + s.id + "': n must be > 0");
    }
    if (s.included) included_.push_back(i);
  }
}

Eigen::ArrayXd StudySet::y() const {
  Eigen::ArrayXd out(included_.size());
  for (std::size_t j = 0; j < included_.size(); ++j) out[j] = studies_[included_[j]].y;
  return out;
}

Eigen::ArrayXd StudySet::se() const {
  Eigen::ArrayXd out(included_.size());
  for (std::size_t j = 0; j < included_.size(); ++j) out[j] = studies_[included_[j]].se;
  return out;
}

Eigen::ArrayXd StudySet::precision_regressor(PrecisionMetric metric) const {
  if (metric == PrecisionMetric::inv_se) return se();
  Eigen::ArrayXd out(included_.size());
  for (std::size_t j = 0; j < included_.size(); ++j) {
    const Study& s = studies_[included_[j]];
    if (!s.n) throw DomainError("study '" + s.id + "' has no sample size; inv_n needs n");
    out[j] = 1.0 / *s.n;
  }
  return out;
}

StudySet StudySet::excluding(const std::vector<std::string>& ids) const {
  std::vector<Study> copy = studies_;
  for (const std::string& id : ids) {
    const auto pos = find(id);
    if (!pos) throw DomainError("unknown study id '" + id + "'");
    copy[*pos].included = false;
  }
  return StudySet(std::move(copy));
}

StudySet StudySet::all_included() const {
  std::vector<Study> copy = studies_;
  for (Study& s : copy) s.included = true;
  return StudySet(std::move(copy));
}

std::optional<std::size_t> StudySet::find(std::string_view id) const {
  for (std::size_t i = 0; i < studies_.size(); ++i) {
    if (studies_[i].id == id) return i;
  }
  return std::nullopt;
}

}  // namespace metabal
