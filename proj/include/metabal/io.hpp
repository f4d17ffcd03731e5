#pragma once

#include "metabal/balance.hpp"
#include "metabal/model.hpp"
#include "metabal/mr.hpp"
#include "metabal/study.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metabal::io {

inline constexpr std::string_view kSchemaVersion = "1";

enum class Format { csv, json };
std::optional<Format> parse_format(std::string_view text);

/// CSV header `id,y,se` or `id,y,se,n`; JSON `{"studies":[{"id","y","se","n"?}]}`.
/// Row order is preserved. Throws ValidationError naming the row and field.
StudySet parse_studies(std::string_view text, Format format);
std::string serialize_studies(const StudySet& set, Format format);

/// CSV header `id,mu_xg,se_xg,mu_yg,se_yg`; JSON `{"variants":[...]}`.
MRDataset parse_mr(std::string_view text, Format format);
std::string serialize_mr(const MRDataset& data, Format format);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// MR-specific part of a result envelope.
struct MRSummary {
  std::string method;  // "ivw" or "egger"
  std::size_t orientation_flips = 0;
  std::optional<PleiotropyEstimate> pleiotropy;

  friend bool operator==(const MRSummary&, const MRSummary&) = default;
};

/// The versioned result envelope:
/// {schema_version, model, estimates, heterogeneity, balance, mr, notes}.
struct ResultEnvelope {
  std::string schema_version{kSchemaVersion};
  ModelFit fit;
  BalanceState balance;
  std::optional<MRSummary> mr;
  std::vector<std::string> notes;

  friend bool operator==(const ResultEnvelope&, const ResultEnvelope&) = default;
};

/// Deterministic, canonically ordered JSON text (two-space indent, trailing
/// newline).
std::string serialize_result(const ResultEnvelope& envelope);
/// Strict inverse of serialize_result; unknown fields are rejected.
ResultEnvelope decode_result(std::string_view text);

/// {schema_version, model, entries: [{excluded_id, estimates, heterogeneity, error}], notes}
std::string serialize_leave_one_out(ModelTag model, const std::vector<LeaveOneOutEntry>& entries,
                                    const std::vector<std::string>& notes);

}  // namespace metabal::io
