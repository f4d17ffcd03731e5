#include "metabal/engine.hpp"

#include "metabal/balance.hpp"
#include "metabal/errors.hpp"
#include "metabal/mr.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace metabal::engine {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void expect_object(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError("expected an object", where);
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) {
      throw ValidationError("unknown field", where.empty() ? item.key() : where + "." + item.key());
    }
  }
}

std::string string_field(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_string()) throw ValidationError("expected a string", where);
  return v.get<std::string>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read file '" + path + "'", "dataset.path");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

DatasetSource parse_dataset(const json& body) {
  if (!body.contains("dataset")) throw ValidationError("missing field", "dataset");
  const json& ds = body.at("dataset");
  expect_object(ds, "dataset", {"format", "content", "path"});
  if (!ds.contains("format")) throw ValidationError("missing field", "dataset.format");
  const auto format = io::parse_format(string_field(ds, "format", "dataset.format"));
  if (!format) throw ValidationError("format must be 'csv' or 'json'", "dataset.format");
  if (ds.contains("content") == ds.contains("path")) {
    throw ValidationError("exactly one of 'content' or 'path' is required", "dataset");
  }
  DatasetSource out;
  out.format = *format;
  if (ds.contains("path")) {
    out.text = read_file(string_field(ds, "path", "dataset.path"));
  } else if (ds.at("content").is_string()) {
    out.text = ds.at("content").get<std::string>();
  } else if (*format == io::Format::json && ds.at("content").is_object()) {
    out.text = ds.at("content").dump();
  } else {
    throw ValidationError("content must be a string (or an object for json)", "dataset.content");
  }
  return out;
}

AnalysisOptions parse_options(const json& body, bool mr) {
  AnalysisOptions out;
  if (!body.contains("options")) return out;
  const json& o = body.at("options");
  if (mr) {
    expect_object(o, "options", {"exclude_ids", "ci_level", "interval"});
  } else {
    expect_object(o, "options", {"exclude_ids", "precision_metric", "ci_level", "tau2_method", "interval"});
  }
  if (o.contains("exclude_ids")) {
    const json& ids = o.at("exclude_ids");
    if (!ids.is_array()) throw ValidationError("expected an array of ids", "options.exclude_ids");
    for (const json& id : ids) {
      if (!id.is_string()) throw ValidationError("expected an array of ids", "options.exclude_ids");
      out.exclude_ids.push_back(id.get<std::string>());
    }
  }
  if (o.contains("precision_metric")) {
    const auto m = parse_precision_metric(string_field(o, "precision_metric", "options.precision_metric"));
    if (!m) throw ValidationError("must be 'inv_se' or 'inv_n'", "options.precision_metric");
    out.metric = *m;
  }
  if (o.contains("ci_level")) {
    const json& v = o.at("ci_level");
    if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0)) {
      throw ValidationError("must be a number in (0, 1)", "options.ci_level");
    }
    out.ci_level = v.get<double>();
  }
  if (o.contains("tau2_method")) {
    const std::string t = string_field(o, "tau2_method", "options.tau2_method");
    if (t == "dl") {
      out.tau2_method = Tau2Method::dl;
    } else if (t == "pm") {
      out.tau2_method = Tau2Method::pm;
    } else {
      throw ValidationError("must be 'dl' or 'pm'", "options.tau2_method");
    }
  }
  if (o.contains("interval")) {
    const auto k = parse_interval_kind(string_field(o, "interval", "options.interval"));
    if (!k) throw ValidationError("must be 'z' or 't'", "options.interval");
    out.interval = *k;
  }
  return out;
}

json dataset_json(const DatasetSource& ds) {
  json out;
  out["format"] = ds.format == io::Format::csv ? "csv" : "json";
  if (ds.format == io::Format::json) {
    try {
      out["content"] = json::parse(ds.text);
    } catch (const json::parse_error&) {
      out["content"] = ds.text;
    }
  } else {
    out["content"] = ds.text;
  }
  return out;
}

json options_json(const AnalysisOptions& o, bool mr) {
  json out = json::object();
  if (!o.exclude_ids.empty()) out["exclude_ids"] = o.exclude_ids;
  if (!mr && o.metric != PrecisionMetric::inv_se) out["precision_metric"] = std::string(to_string(o.metric));
  if (o.ci_level != 0.95) out["ci_level"] = o.ci_level;
  if (!mr && o.tau2_method) out["tau2_method"] = *o.tau2_method == Tau2Method::dl ? "dl" : "pm";
  if (o.interval) out["interval"] = std::string(to_string(*o.interval));
  return out;
}

void check_exclusions(const StudySet& set, const std::vector<std::string>& ids) {
  for (const std::string& id : ids) {
    if (!set.find(id)) throw ValidationError("unknown study id '" + id + "'", "options.exclude_ids");
  }
}

std::vector<std::string> egger_notes(const EggerFit& fit) {
  std::vector<std::string> notes;
  const double exact = fit.beta0.se * fit.beta0.se;
  const double alt = fit.var_beta0_mean_s2;
  if (std::abs(exact - alt) > 1e-9 * std::max(std::abs(exact), std::abs(alt))) {
    notes.push_back("Var(beta0): least-squares " + io::format_double(exact) +
                    "; Var(mu) times mean squared precision regressor " + io::format_double(alt) +
                    " (reported: least-squares)");
  }
  return notes;
}

// Fits `spec` on the working set and attaches the full-data state as ghost
// when studies were excluded.
io::ResultEnvelope fit_and_balance(const StudySet& full, const StudySet& working, const ModelSpec& spec,
                                   bool has_exclusions, std::vector<std::string> notes) {
  io::ResultEnvelope env;
  env.fit = fit_model(working, spec);
  env.balance = build_balance(working, env.fit);
  if (has_exclusions) {
    try {
      const ModelFit before = fit_model(full, spec);
      env.balance = with_ghost(env.balance, build_balance(full, before));
    } catch (const std::exception& e) {
      notes.push_back(std::string("ghost unavailable: ") + e.what());
    }
  }
  if (env.fit.egger) {
    for (std::string& n : egger_notes(*env.fit.egger)) notes.push_back(std::move(n));
  }
  env.notes = std::move(notes);
  return env;
}

}  // namespace

AnalysisRequest parse_analysis_request(const json& body) {
  expect_object(body, "", {"dataset", "model", "options"});
  AnalysisRequest out;
  out.dataset = parse_dataset(body);
  if (body.contains("model")) out.model = string_field(body, "model", "model");
  out.options = parse_options(body, false);
  return out;
}

MRRequest parse_mr_request(const json& body) {
  expect_object(body, "", {"dataset", "method", "options"});
  MRRequest out;
  out.dataset = parse_dataset(body);
  if (body.contains("method")) out.method = string_field(body, "method", "method");
  if (out.method != "ivw" && out.method != "egger") {
    throw ValidationError("must be 'ivw' or 'egger'", "method");
  }
  out.options = parse_options(body, true);
  return out;
}

json to_json(const AnalysisRequest& request) {
  json out;
  out["dataset"] = dataset_json(request.dataset);
  out["model"] = request.model;
  out["options"] = options_json(request.options, false);
  return out;
}

json to_json(const MRRequest& request) {
  json out;
  out["dataset"] = dataset_json(request.dataset);
  out["method"] = request.method;
  out["options"] = options_json(request.options, true);
  return out;
}

ResolvedModel resolve_model(const std::string& model, const AnalysisOptions& options) {
  if (!(options.ci_level > 0.0 && options.ci_level < 1.0)) {
    throw ValidationError("must be a number in (0, 1)", "options.ci_level");
  }
  ResolvedModel out;
  ModelSpec& spec = out.spec;
  spec.metric = options.metric;
  spec.pooled_interval = {options.ci_level, options.interval.value_or(IntervalKind::z)};
  spec.egger_interval = {options.ci_level, options.interval.value_or(IntervalKind::t)};

  const auto tau2 = options.tau2_method;
  auto tau2_ignored = [&] {
    if (tau2) out.warnings.push_back("tau2_method is ignored for model " + model);
  };
  if (model == "fixed") {
    spec.tag = ModelTag::fixed;
    tau2_ignored();
  } else if (model == "re_additive") {
    spec.tag = tau2.value_or(Tau2Method::pm) == Tau2Method::dl ? ModelTag::re_additive_dl
                                                                : ModelTag::re_additive_pm;
  } else if (model == "re_additive_dl" || model == "re_additive_pm") {
    spec.tag = model == "re_additive_dl" ? ModelTag::re_additive_dl : ModelTag::re_additive_pm;
    const Tau2Method implied = spec.tag == ModelTag::re_additive_dl ? Tau2Method::dl : Tau2Method::pm;
    if (tau2 && *tau2 != implied) {
      throw ValidationError("conflicts with model " + model, "options.tau2_method");
    }
  } else if (model == "re_multiplicative") {
    spec.tag = ModelTag::re_multiplicative;
    tau2_ignored();
  } else if (model == "egger") {
    spec.tag = ModelTag::egger;
    tau2_ignored();
  } else {
    throw ValidationError("unknown model '" + model +
                              "' (fixed, re_additive, re_additive_dl, re_additive_pm, "
                              "re_multiplicative, egger)",
                          "model");
  }
  if (spec.tag != ModelTag::egger && options.metric != PrecisionMetric::inv_se) {
    out.warnings.push_back("precision_metric only affects egger fits");
  }
  return out;
}

io::ResultEnvelope analyze(const AnalysisRequest& request) {
  const ResolvedModel resolved = resolve_model(request.model, request.options);
  const StudySet full = io::parse_studies(request.dataset.text, request.dataset.format);
  check_exclusions(full, request.options.exclude_ids);
  const StudySet working = full.excluding(request.options.exclude_ids);
  return fit_and_balance(full, working, resolved.spec, !request.options.exclude_ids.empty(),
                         resolved.warnings);
}

io::ResultEnvelope analyze_mr(const MRRequest& request) {
  const MRDataset data = io::parse_mr(request.dataset.text, request.dataset.format);
  AnalysisOptions options = request.options;
  ResolvedModel resolved =
      resolve_model(request.method == "ivw" ? "fixed" : "egger", options);

  io::MRSummary summary;
  summary.method = request.method;
  std::vector<std::string> notes;
  MRDataset used = data;
  if (request.method == "egger") {
    used = data.oriented_copy(&summary.orientation_flips);
    notes.push_back("variants oriented so that mu_xg > 0 (" +
                    std::to_string(summary.orientation_flips) + " flipped)");
  }
  const StudySet full = wald_ratios(used);
  check_exclusions(full, options.exclude_ids);
  const StudySet working = full.excluding(options.exclude_ids);
  io::ResultEnvelope env =
      fit_and_balance(full, working, resolved.spec, !options.exclude_ids.empty(), std::move(notes));
  if (env.fit.egger) summary.pleiotropy = pleiotropy_from_phi(env.fit.egger->phi);
  env.mr = std::move(summary);
  return env;
}

std::string handle_analyze(const json& body) {
  return io::serialize_result(analyze(parse_analysis_request(body)));
}

std::string handle_egger(const json& body) {
  AnalysisRequest request = parse_analysis_request(body);
  if (body.contains("model") && request.model != "egger") {
    throw ValidationError("the egger endpoint only fits model 'egger'", "model");
  }
  request.model = "egger";
  return io::serialize_result(analyze(request));
}

std::string handle_mr(const json& body) {
  return io::serialize_result(analyze_mr(parse_mr_request(body)));
}

std::string handle_leave_one_out(const json& body) {
  const AnalysisRequest request = parse_analysis_request(body);
  const ResolvedModel resolved = resolve_model(request.model, request.options);
  const StudySet full = io::parse_studies(request.dataset.text, request.dataset.format);
  check_exclusions(full, request.options.exclude_ids);
  const StudySet working = full.excluding(request.options.exclude_ids);
  return io::serialize_leave_one_out(resolved.spec.tag, leave_one_out(working, resolved.spec),
                                     resolved.warnings);
}

std::string handle_health() {
  ordered_json doc;
  doc["schema_version"] = std::string(io::kSchemaVersion);
  doc["status"] = "ok";
  return doc.dump(2) + "\n";
}

std::string error_body(const std::string& code, const std::string& message,
                       const std::optional<std::string>& field, std::optional<long> row) {
  ordered_json err;
  err["code"] = code;
  err["message"] = message;
  err["field"] = field ? ordered_json(*field) : ordered_json(nullptr);
  err["row"] = row ? ordered_json(*row) : ordered_json(nullptr);
  ordered_json doc;
  doc["schema_version"] = std::string(io::kSchemaVersion);
  doc["error"] = std::move(err);
  return doc.dump(2) + "\n";
}

}  // namespace metabal::engine
