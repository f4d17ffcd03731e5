#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metabal {

/// One summary row: an effect estimate and its standard error.
struct Study {
  std::string id;
  double y = 0.0;
  double se = 1.0;
  std::optional<double> n;  // sample size, needed for the 1/n precision metric
  bool included = true;

  friend bool operator==(const Study&, const Study&) = default;
};

/// Regressor used as the small-study axis in Egger-type fits.
enum class PrecisionMetric { inv_se, inv_n };

std::string_view to_string(PrecisionMetric metric);
std::optional<PrecisionMetric> parse_precision_metric(std::string_view text);

/// Ordered collection of studies with unique ids. Validation happens on
/// construction: se > 0, y and se finite, n > 0 when present.
class StudySet {
 public:
  StudySet() = default;
  explicit StudySet(std::vector<Study> studies);

  const std::vector<Study>& studies() const noexcept { return studies_; }
  std::size_t size() const noexcept { return studies_.size(); }

  /// Number of included studies.
  std::size_t k() const noexcept { return included_.size(); }

  /// Positions (into studies()) of the included studies, in order.
  const std::vector<std::size_t>& included_indices() const noexcept { return included_; }

  Eigen::ArrayXd y() const;
  Eigen::ArrayXd se() const;
  /// Regressor for Egger fits: s_i under inv_se, 1/n_i under inv_n.
  /// Throws DomainError if inv_n is requested and a study lacks n.
  Eigen::ArrayXd precision_regressor(PrecisionMetric metric) const;

  /// Copy with the named studies flagged excluded. Unknown ids throw
  /// DomainError naming the id.
  StudySet excluding(const std::vector<std::string>& ids) const;
  /// Copy with every study included.
  StudySet all_included() const;

  std::optional<std::size_t> find(std::string_view id) const;

  friend bool operator==(const StudySet& a, const StudySet& b) { return a.studies_ == b.studies_; }

 private:
  std::vector<Study> studies_;
  std::vector<std::size_t> included_;
};

}  // namespace metabal
