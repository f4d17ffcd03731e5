#pragma once

#include <optional>
#include <string_view>

namespace metabal {

/// Reference distribution for intervals and p-values.
enum class IntervalKind { z, t };

std::string_view to_string(IntervalKind kind);
std::optional<IntervalKind> parse_interval_kind(std::string_view text);

struct IntervalOptions {
  double level = 0.95;
  IntervalKind kind = IntervalKind::z;

  friend bool operator==(const IntervalOptions&, const IntervalOptions&) = default;
};

/// Two-sided critical value; `df` is ignored for the normal reference.
/// z at 0.95 is 1.959964.
double critical_value(const IntervalOptions& options, double df);

/// Two-sided p-value for statistic `stat`.
double two_sided_p(double stat, IntervalKind kind, double df);

/// Estimate with its standard error and the derived interval and test.
/// `statistic` and `p_value` are empty when se == 0.
struct Coefficient {
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> statistic;
  std::optional<double> p_value;

  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

Coefficient make_coefficient(double estimate, double se, const IntervalOptions& options, double df);

}  // namespace metabal
