#include "metabal/io.hpp"

#include "metabal/errors.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <set>
#include <unordered_set>

namespace metabal::io {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<Format> parse_format(std::string_view text) {
  if (text == "csv") return Format::csv;
  if (text == "json") return Format::json;
  return std::nullopt;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

// ---------------------------------------------------------------- CSV

struct CsvLine {
  long number;  // 1-based line number in the file
  std::vector<std::string> fields;
};

std::vector<std::string> split_csv_line(std::string_view line, long number) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw ValidationError("characters after closing quote", std::nullopt, number);
      field += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field", std::nullopt, number);
  fields.push_back(std::move(field));
  return fields;
}

std::vector<CsvLine> read_csv(std::string_view text, const std::vector<std::string>& header_a,
                              const std::vector<std::string>& header_b, bool& has_optional) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<CsvLine> rows;
  long number = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    std::vector<std::string> fields = split_csv_line(line, number);
    if (!header_seen) {
      header_seen = true;
      if (fields == header_a) {
        has_optional = false;
      } else if (!header_b.empty() && fields == header_b) {
        has_optional = true;
      } else {
        std::string expected;
        for (const auto& h : header_a) expected += (expected.empty() ? "" : ",") + h;
        throw ValidationError("header must be '" + expected + "'" +
                                  (header_b.empty() ? std::string() : " with optional ',n'"),
                              std::nullopt, number);
      }
      continue;
    }
    const std::size_t width = has_optional ? header_b.size() : header_a.size();
    if (fields.size() != width) {
      throw ValidationError("expected " + std::to_string(width) + " fields, found " +
                                std::to_string(fields.size()),
                            std::nullopt, number);
    }
    rows.push_back({number, std::move(fields)});
    if (pos > text.size()) break;
  }
  if (!header_seen) throw ValidationError("empty input: missing header");
  return rows;
}

double parse_number(const std::string& raw, const char* field, long row) {
  std::string_view text = raw;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ValidationError("not a number: '" + raw + "'", field, row);
  }
  if (!std::isfinite(value)) throw ValidationError("value is not finite", field, row);
  return value;
}

std::string csv_escape(const std::string& field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// ---------------------------------------------------------------- strict JSON

void expect_keys(const json& obj, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional, const std::string& where,
                 std::optional<long> row = std::nullopt) {
  if (!obj.is_object()) throw ValidationError("expected an object", where, row);
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!obj.contains(k)) throw ValidationError("missing field", where.empty() ? k : where + "." + k, row);
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ValidationError("unknown field", where.empty() ? item.key() : where + "." + item.key(), row);
    }
  }
}

double json_number(const json& obj, const char* key, std::optional<long> row = std::nullopt) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError("expected a number", key, row);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError("value is not finite", key, row);
  return d;
}

std::optional<double> json_optional_number(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (v.is_null()) return std::nullopt;
  return json_number(obj, key);
}

std::string json_string(const json& obj, const char* key, std::optional<long> row = std::nullopt) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ValidationError("expected a string", key, row);
  return v.get<std::string>();
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- studies

StudySet parse_studies(std::string_view text, Format format) {
  std::vector<Study> studies;
  std::vector<long> rows;
  if (format == Format::csv) {
    bool has_n = false;
    for (const CsvLine& line : read_csv(text, {"id", "y", "se"}, {"id", "y", "se", "n"}, has_n)) {
      Study s;
      s.id = line.fields[0];
      if (s.id.empty()) throw ValidationError("id must not be empty", "id", line.number);
      s.y = parse_number(line.fields[1], "y", line.number);
      s.se = parse_number(line.fields[2], "se", line.number);
      if (has_n && !line.fields[3].empty()) s.n = parse_number(line.fields[3], "n", line.number);
      studies.push_back(std::move(s));
      rows.push_back(line.number);
    }
  } else {
    const json doc = parse_json_text(text);
    expect_keys(doc, {"studies"}, {}, "");
    const json& arr = doc.at("studies");
    if (!arr.is_array()) throw ValidationError("expected an array", "studies");
    long row = 0;
    for (const json& item : arr) {
      ++row;
      expect_keys(item, {"id", "y", "se"}, {"n"}, "", row);
      Study s;
      s.id = json_string(item, "id", row);
      if (s.id.empty()) throw ValidationError("id must not be empty", "id", row);
      s.y = json_number(item, "y", row);
      s.se = json_number(item, "se", row);
      if (item.contains("n") && !item.at("n").is_null()) s.n = json_number(item, "n", row);
      studies.push_back(std::move(s));
      rows.push_back(row);
    }
  }
  if (studies.empty()) throw ValidationError("dataset contains no studies");

  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const Study& s = studies[i];
    if (!ids.insert(s.id).second) throw ValidationError("duplicate id '" + s.id + "'", "id", rows[i]);
    if (!(s.se > 0.0)) throw ValidationError("se must be > 0", "se", rows[i]);
    if (s.n && !(*s.n > 0.0)) throw ValidationError("n must be > 0", "n", rows[i]);
  }
  return StudySet(std::move(studies));
}

std::string serialize_studies(const StudySet& set, Format format) {
  bool any_n = false;
  for (const Study& s : set.studies()) any_n = any_n || s.n.has_value();
  if (format == Format::csv) {
    std::string out = any_n ? "id,y,se,n\n" : "id,y,se\n";
    for (const Study& s : set.studies()) {
      out += csv_escape(s.id) + "," + format_double(s.y) + "," + format_double(s.se);
      if (any_n) out += "," + (s.n ? format_double(*s.n) : std::string());
      out += "\n";
    }
    return out;
  }
  ordered_json arr = ordered_json::array();
  for (const Study& s : set.studies()) {
    ordered_json row;
    row["id"] = s.id;
    row["y"] = s.y;
    row["se"] = s.se;
    if (s.n) row["n"] = *s.n;
    arr.push_back(std::move(row));
  }
  ordered_json doc;
  doc["studies"] = std::move(arr);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- MR panels

MRDataset parse_mr(std::string_view text, Format format) {
  std::vector<MRVariant> variants;
  std::vector<long> rows;
  if (format == Format::csv) {
    bool unused = false;
    for (const CsvLine& line :
         read_csv(text, {"id", "mu_xg", "se_xg", "mu_yg", "se_yg"}, {}, unused)) {
      MRVariant v;
      v.id = line.fields[0];
      if (v.id.empty()) throw ValidationError("id must not be empty", "id", line.number);
      v.mu_xg = parse_number(line.fields[1], "mu_xg", line.number);
      v.se_xg = parse_number(line.fields[2], "se_xg", line.number);
      v.mu_yg = parse_number(line.fields[3], "mu_yg", line.number);
      v.se_yg = parse_number(line.fields[4], "se_yg", line.number);
      variants.push_back(std::move(v));
      rows.push_back(line.number);
    }
  } else {
    const json doc = parse_json_text(text);
    expect_keys(doc, {"variants"}, {}, "");
    const json& arr = doc.at("variants");
    if (!arr.is_array()) throw ValidationError("expected an array", "variants");
    long row = 0;
    for (const json& item : arr) {
      ++row;
      expect_keys(item, {"id", "mu_xg", "se_xg", "mu_yg", "se_yg"}, {}, "", row);
      MRVariant v;
      v.id = json_string(item, "id", row);
      if (v.id.empty()) throw ValidationError("id must not be empty", "id", row);
      v.mu_xg = json_number(item, "mu_xg", row);
      v.se_xg = json_number(item, "se_xg", row);
      v.mu_yg = json_number(item, "mu_yg", row);
      v.se_yg = json_number(item, "se_yg", row);
      variants.push_back(std::move(v));
      rows.push_back(row);
    }
  }
  if (variants.empty()) throw ValidationError("dataset contains no variants");

  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const MRVariant& v = variants[i];
    if (!ids.insert(v.id).second) throw ValidationError("duplicate id '" + v.id + "'", "id", rows[i]);
    if (v.mu_xg == 0.0) {
      throw ValidationError("gene-exposure association is zero", "mu_xg", rows[i]);
    }
    if (!(v.se_xg > 0.0)) throw ValidationError("se_xg must be > 0", "se_xg", rows[i]);
    if (!(v.se_yg > 0.0)) throw ValidationError("se_yg must be > 0", "se_yg", rows[i]);
  }
  return MRDataset(std::move(variants));
}

std::string serialize_mr(const MRDataset& data, Format format) {
  if (format == Format::csv) {
    std::string out = "id,mu_xg,se_xg,mu_yg,se_yg\n";
    for (const MRVariant& v : data.variants()) {
      out += csv_escape(v.id) + "," + format_double(v.mu_xg) + "," + format_double(v.se_xg) + "," +
             format_double(v.mu_yg) + "," + format_double(v.se_yg) + "\n";
    }
    return out;
  }
  ordered_json arr = ordered_json::array();
  for (const MRVariant& v : data.variants()) {
    ordered_json row;
    row["id"] = v.id;
    row["mu_xg"] = v.mu_xg;
    row["se_xg"] = v.se_xg;
    row["mu_yg"] = v.mu_yg;
    row["se_yg"] = v.se_yg;
    arr.push_back(std::move(row));
  }
  ordered_json doc;
  doc["variants"] = std::move(arr);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- result envelope

namespace {

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json encode(const Coefficient& c) {
  ordered_json j;
  j["estimate"] = c.estimate;
  j["se"] = c.se;
  j["ci_low"] = c.ci_low;
  j["ci_high"] = c.ci_high;
  j["statistic"] = optional_number(c.statistic);
  j["p_value"] = optional_number(c.p_value);
  return j;
}

Coefficient decode_coefficient(const json& j, const std::string& where,
                               std::initializer_list<const char*> extra = {}) {
  expect_keys(j, {"estimate", "se", "ci_low", "ci_high", "statistic", "p_value"}, extra, where);
  for (const char* k : extra) {
    if (!j.contains(k)) throw ValidationError("missing field", where + "." + k);
  }
  Coefficient c;
  c.estimate = json_number(j, "estimate");
  c.se = json_number(j, "se");
  c.ci_low = json_number(j, "ci_low");
  c.ci_high = json_number(j, "ci_high");
  c.statistic = json_optional_number(j, "statistic");
  c.p_value = json_optional_number(j, "p_value");
  return c;
}

ordered_json encode(const EggerFit& e) {
  ordered_json j;
  j["beta0"] = encode(e.beta0);
  j["mu"] = encode(e.mu);
  j["phi"] = e.phi;
  j["q_prime"] = e.q_prime;
  j["cov_beta0_mu"] = e.cov_beta0_mu;
  j["var_beta0_mean_s2"] = e.var_beta0_mean_s2;
  j["dof"] = e.dof;
  j["precision_metric"] = std::string(to_string(e.metric));
  j["reference"] = std::string(to_string(e.interval.kind));
  j["ci_level"] = e.interval.level;
  ordered_json arr = ordered_json::array();
  for (const TransformedStudy& t : e.transformed) {
    ordered_json row;
    row["y"] = t.y;
    row["precision"] = optional_number(t.precision);
    arr.push_back(std::move(row));
  }
  j["transformed"] = std::move(arr);
  return j;
}

EggerFit decode_egger(const json& j) {
  expect_keys(j,
              {"beta0", "mu", "phi", "q_prime", "cov_beta0_mu", "var_beta0_mean_s2", "dof",
               "precision_metric", "reference", "ci_level", "transformed"},
              {}, "estimates.egger");
  EggerFit e;
  e.beta0 = decode_coefficient(j.at("beta0"), "estimates.egger.beta0");
  e.mu = decode_coefficient(j.at("mu"), "estimates.egger.mu");
  e.phi = json_number(j, "phi");
  e.q_prime = json_number(j, "q_prime");
  e.cov_beta0_mu = json_number(j, "cov_beta0_mu");
  e.var_beta0_mean_s2 = json_number(j, "var_beta0_mean_s2");
  e.dof = static_cast<int>(json_number(j, "dof"));
  const auto metric = parse_precision_metric(json_string(j, "precision_metric"));
  if (!metric) throw ValidationError("unknown precision metric", "estimates.egger.precision_metric");
  e.metric = *metric;
  const auto kind = parse_interval_kind(json_string(j, "reference"));
  if (!kind) throw ValidationError("unknown reference", "estimates.egger.reference");
  e.interval = {json_number(j, "ci_level"), *kind};
  for (const json& row : j.at("transformed")) {
    expect_keys(row, {"y", "precision"}, {}, "estimates.egger.transformed");
    e.transformed.push_back({json_number(row, "y"), json_optional_number(row, "precision")});
  }
  return e;
}

ordered_json encode(const BalanceState& b) {
  ordered_json j;
  j["model"] = std::string(to_string(b.model));
  j["pivot"] = b.pivot;
  j["stand"] = ordered_json{{"low", b.stand_low}, {"high", b.stand_high}};
  j["torque_residual"] = b.torque_residual;
  ordered_json masses = ordered_json::array();
  for (const BalanceMass& m : b.masses) {
    ordered_json row;
    row["id"] = m.id;
    row["x"] = m.x;
    row["height"] = optional_number(m.height);
    row["weight"] = m.weight;
    row["mass_pct"] = m.mass_pct;
    row["hole_len"] = m.hole_len;
    row["excluded"] = m.excluded;
    masses.push_back(std::move(row));
  }
  j["masses"] = std::move(masses);
  j["ghost"] = b.ghost ? encode(*b.ghost) : ordered_json(nullptr);
  return j;
}

ModelTag decode_tag(const json& j, const char* key, const std::string& where) {
  const auto tag = parse_model_tag(json_string(j, key));
  if (!tag) throw ValidationError("unknown model", where);
  return *tag;
}

BalanceState decode_balance(const json& j) {
  expect_keys(j, {"model", "pivot", "stand", "torque_residual", "masses", "ghost"}, {}, "balance");
  BalanceState b;
  b.model = decode_tag(j, "model", "balance.model");
  b.pivot = json_number(j, "pivot");
  const json& stand = j.at("stand");
  expect_keys(stand, {"low", "high"}, {}, "balance.stand");
  b.stand_low = json_number(stand, "low");
  b.stand_high = json_number(stand, "high");
  b.torque_residual = json_number(j, "torque_residual");
  for (const json& row : j.at("masses")) {
    expect_keys(row, {"id", "x", "height", "weight", "mass_pct", "hole_len", "excluded"}, {},
                "balance.masses");
    BalanceMass m;
    m.id = json_string(row, "id");
    m.x = json_number(row, "x");
    m.height = json_optional_number(row, "height");
    m.weight = json_number(row, "weight");
    m.mass_pct = json_number(row, "mass_pct");
    m.hole_len = json_number(row, "hole_len");
    if (!row.at("excluded").is_boolean()) throw ValidationError("expected a boolean", "excluded");
    m.excluded = row.at("excluded").get<bool>();
    b.masses.push_back(std::move(m));
  }
  if (!j.at("ghost").is_null()) b.ghost = std::make_shared<BalanceState>(decode_balance(j.at("ghost")));
  return b;
}

}  // namespace

namespace {

ordered_json encode_estimates(const ModelFit& fit) {
  ordered_json estimates;
  estimates["k"] = fit.pooled.weights.size();
  ordered_json mu = encode(fit.pooled.coefficient());
  mu["reference"] = std::string(to_string(fit.pooled.interval.kind));
  mu["df"] = fit.pooled.df;
  mu["ci_level"] = fit.pooled.interval.level;
  estimates["mu"] = std::move(mu);
  ordered_json weights = ordered_json::array();
  for (Eigen::Index i = 0; i < fit.pooled.weights.size(); ++i) weights.push_back(fit.pooled.weights[i]);
  estimates["weights"] = std::move(weights);
  estimates["egger"] = fit.egger ? encode(*fit.egger) : ordered_json(nullptr);
  return estimates;
}

ordered_json encode(const Heterogeneity& h) {
  ordered_json het;
  het["q"] = h.q;
  het["df"] = h.df;
  het["i2"] = h.i2;
  het["tau2"] = h.tau2;
  het["phi"] = optional_number(h.phi);
  het["s2_typ"] = optional_number(h.s2_typ);
  return het;
}

}  // namespace

std::string serialize_result(const ResultEnvelope& envelope) {
  const ModelFit& fit = envelope.fit;
  ordered_json doc;
  doc["schema_version"] = envelope.schema_version;
  doc["model"] = std::string(to_string(fit.tag));
  doc["estimates"] = encode_estimates(fit);
  doc["heterogeneity"] = encode(fit.heterogeneity);
  doc["balance"] = encode(envelope.balance);

  if (envelope.mr) {
    ordered_json mr;
    mr["method"] = envelope.mr->method;
    mr["orientation_flips"] = envelope.mr->orientation_flips;
    if (envelope.mr->pleiotropy) {
      mr["sigma2_beta0"] = optional_number(envelope.mr->pleiotropy->sigma2_beta0);
      mr["pleiotropy_identified"] = envelope.mr->pleiotropy->identified();
    } else {
      mr["sigma2_beta0"] = nullptr;
      mr["pleiotropy_identified"] = nullptr;
    }
    doc["mr"] = std::move(mr);
  } else {
    doc["mr"] = nullptr;
  }
  doc["notes"] = envelope.notes;
  return doc.dump(2) + "\n";
}

ResultEnvelope decode_result(std::string_view text) {
  const json doc = parse_json_text(text);
  expect_keys(doc, {"schema_version", "model", "estimates", "heterogeneity", "balance", "mr", "notes"},
              {}, "");
  ResultEnvelope env;
  env.schema_version = json_string(doc, "schema_version");
  if (env.schema_version != kSchemaVersion) {
    throw ValidationError("unsupported schema version '" + env.schema_version + "'", "schema_version");
  }
  ModelFit& fit = env.fit;
  fit.tag = decode_tag(doc, "model", "model");

  const json& est = doc.at("estimates");
  expect_keys(est, {"k", "mu", "weights", "egger"}, {}, "estimates");
  const json& mu = est.at("mu");
  const Coefficient c = decode_coefficient(mu, "estimates.mu", {"reference", "df", "ci_level"});
  PooledEstimate& p = fit.pooled;
  p.model = fit.tag;
  p.mu_hat = c.estimate;
  p.se_mu = c.se;
  p.ci_low = c.ci_low;
  p.ci_high = c.ci_high;
  p.statistic = c.statistic;
  p.p_value = c.p_value;
  p.df = json_number(mu, "df");
  const auto kind = parse_interval_kind(json_string(mu, "reference"));
  if (!kind) throw ValidationError("unknown reference", "estimates.mu.reference");
  p.interval = {json_number(mu, "ci_level"), *kind};
  const json& weights = est.at("weights");
  if (!weights.is_array()) throw ValidationError("expected an array", "estimates.weights");
  p.weights.resize(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].is_number()) throw ValidationError("expected a number", "estimates.weights");
    p.weights[static_cast<Eigen::Index>(i)] = weights[i].get<double>();
  }
  if (json_number(est, "k") != static_cast<double>(weights.size())) {
    throw ValidationError("k does not match the weights", "estimates.k");
  }
  if (!est.at("egger").is_null()) fit.egger = decode_egger(est.at("egger"));

  const json& het = doc.at("heterogeneity");
  expect_keys(het, {"q", "df", "i2", "tau2", "phi", "s2_typ"}, {}, "heterogeneity");
  fit.heterogeneity.q = json_number(het, "q");
  fit.heterogeneity.df = json_number(het, "df");
  fit.heterogeneity.i2 = json_number(het, "i2");
  fit.heterogeneity.tau2 = json_number(het, "tau2");
  fit.heterogeneity.phi = json_optional_number(het, "phi");
  fit.heterogeneity.s2_typ = json_optional_number(het, "s2_typ");

  env.balance = decode_balance(doc.at("balance"));

  const json& mr = doc.at("mr");
  if (!mr.is_null()) {
    expect_keys(mr, {"method", "orientation_flips", "sigma2_beta0", "pleiotropy_identified"}, {}, "mr");
    MRSummary summary;
    summary.method = json_string(mr, "method");
    summary.orientation_flips = static_cast<std::size_t>(json_number(mr, "orientation_flips"));
    if (!mr.at("pleiotropy_identified").is_null()) {
      summary.pleiotropy = PleiotropyEstimate{json_optional_number(mr, "sigma2_beta0")};
    }
    env.mr = std::move(summary);
  }
  const json& notes = doc.at("notes");
  if (!notes.is_array()) throw ValidationError("expected an array", "notes");
  for (const json& n : notes) {
    if (!n.is_string()) throw ValidationError("expected a string", "notes");
    env.notes.push_back(n.get<std::string>());
  }
  return env;
}

std::string serialize_leave_one_out(ModelTag model, const std::vector<LeaveOneOutEntry>& entries,
                                    const std::vector<std::string>& notes) {
  ordered_json doc;
  doc["schema_version"] = std::string(kSchemaVersion);
  doc["model"] = std::string(to_string(model));
  ordered_json arr = ordered_json::array();
  for (const LeaveOneOutEntry& e : entries) {
    ordered_json row;
    row["excluded_id"] = e.excluded_id;
    row["estimates"] = e.fit ? encode_estimates(*e.fit) : ordered_json(nullptr);
    row["heterogeneity"] = e.fit ? encode(e.fit->heterogeneity) : ordered_json(nullptr);
    row["error"] = e.error ? ordered_json(*e.error) : ordered_json(nullptr);
    arr.push_back(std::move(row));
  }
  doc["entries"] = std::move(arr);
  doc["notes"] = notes;
  return doc.dump(2) + "\n";
}

}  // namespace metabal::io
