#pragma once

// The single request path shared by the CLI and the HTTP service. Requests are
// JSON documents; every handler returns the serialized response body.

#include "metabal/io.hpp"
#include "metabal/model.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace metabal::engine {

enum class Tau2Method { dl, pm };

struct DatasetSource {
  io::Format format = io::Format::csv;
  std::string text;  // CSV text, or serialized JSON dataset
};

struct AnalysisOptions {
  std::vector<std::string> exclude_ids;
  PrecisionMetric metric = PrecisionMetric::inv_se;
  double ci_level = 0.95;
  std::optional<Tau2Method> tau2_method;
  std::optional<IntervalKind> interval;
};

/// {"dataset": {...}, "model": "...", "options": {...}}
///
/// dataset is {"format": "csv", "content": "<csv text>"},
/// {"format": "json", "content": {"studies": [...]}} or
/// {"format": "csv"|"json", "path": "<file>"}.
/// model is fixed | re_additive | re_additive_dl | re_additive_pm |
/// re_multiplicative | egger; re_additive takes tau2_method (default pm).
struct AnalysisRequest {
  DatasetSource dataset;
  std::string model = "fixed";
  AnalysisOptions options;
};

/// {"dataset": {...}, "method": "ivw"|"egger", "options": {"ci_level", "interval"}}
struct MRRequest {
  DatasetSource dataset;
  std::string method = "ivw";
  AnalysisOptions options;
};

AnalysisRequest parse_analysis_request(const nlohmann::json& body);
MRRequest parse_mr_request(const nlohmann::json& body);
nlohmann::json to_json(const AnalysisRequest& request);
nlohmann::json to_json(const MRRequest& request);

/// Resolved model plus any compatibility warnings.
struct ResolvedModel {
  ModelSpec spec;
  std::vector<std::string> warnings;
};
ResolvedModel resolve_model(const std::string& model, const AnalysisOptions& options);

io::ResultEnvelope analyze(const AnalysisRequest& request);
io::ResultEnvelope analyze_mr(const MRRequest& request);

std::string handle_analyze(const nlohmann::json& body);
std::string handle_egger(const nlohmann::json& body);
std::string handle_mr(const nlohmann::json& body);
std::string handle_leave_one_out(const nlohmann::json& body);
std::string handle_health();

/// Error body for client-side failures: {"schema_version","error":{code,message,field,row}}.
std::string error_body(const std::string& code, const std::string& message,
                       const std::optional<std::string>& field = std::nullopt,
                       std::optional<long> row = std::nullopt);

}  // namespace metabal::engine
