#include "metabal/inference.hpp"

#include "metabal/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>

namespace metabal {

std::string_view to_string(IntervalKind kind) { return kind == IntervalKind::z ? "z" : "t"; }

std::optional<IntervalKind> parse_interval_kind(std::string_view text) {
  if (text == "z") return IntervalKind::z;
  if (text == "t") return IntervalKind::t;
  return std::nullopt;
}

double critical_value(const IntervalOptions& options, double df) {
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw DomainError("confidence level must lie in (0, 1)");
  }
  const double upper = 0.5 + options.level / 2.0;
  if (options.kind == IntervalKind::z) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), upper);
  }
  if (!(df > 0.0)) throw DomainError("t reference needs positive degrees of freedom");
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), upper);
}

double two_sided_p(double stat, IntervalKind kind, double df) {
  const double a = std::abs(stat);
  if (std::isinf(a)) return 0.0;
  if (kind == IntervalKind::z) {
    return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(), a));
  }
  return 2.0 * boost::math::cdf(
                   boost::math::complement(boost::math::students_t_distribution<double>(df), a));
}

Coefficient make_coefficient(double estimate, double se, const IntervalOptions& options,
                             double df) {
  Coefficient c;
  c.estimate = estimate;
  c.se = se;
  const double crit = critical_value(options, df);
  c.ci_low = estimate - crit * se;
  c.ci_high = estimate + crit * se;
  if (se > 0.0) {
    c.statistic = estimate / se;
    c.p_value = two_sided_p(*c.statistic, options.kind, df);
  }
  return c;
}

}  // namespace metabal
