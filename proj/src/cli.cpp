#include "metabal/cli.hpp"

#include "metabal/engine.hpp"
#include "metabal/errors.hpp"
#include "metabal/io.hpp"
#include "metabal/service.hpp"
#include "metabal/simulate.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace metabal::cli {

namespace {

using nlohmann::json;

struct DatasetArgs {
  std::string input;
  std::string format;
};

struct AnalyzeArgs {
  DatasetArgs data;
  std::string model = "fixed";
  std::string tau2;
  std::vector<std::string> exclude;
  std::string metric;
  double ci_level = 0.95;
  std::string interval;
  std::string out = "table";
};

struct MRArgs {
  DatasetArgs data;
  std::string method = "ivw";
  std::vector<std::string> exclude;
  double ci_level = 0.95;
  std::string interval;
  std::string out = "table";
};

struct SimulateArgs {
  std::string model;
  std::size_t k = 10;
  std::uint64_t seed = 1;
  SimParams params;
  std::string format = "csv";
  bool as_studies = false;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--input", args.input, "Dataset file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", args.format, "Dataset format (default: from file extension)")
      ->check(CLI::IsMember({"csv", "json"}));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read file '" + path + "'", "input");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json dataset_json(const DatasetArgs& args) {
  std::string format = args.format;
  if (format.empty()) {
    format = args.input.size() >= 5 && args.input.substr(args.input.size() - 5) == ".json" ? "json" : "csv";
  }
  json ds;
  ds["format"] = format;
  const std::string text = read_file(args.input);
  if (format == "json") {
    try {
      ds["content"] = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), "input");
    }
  } else {
    ds["content"] = text;
  }
  return ds;
}

json analysis_request(const AnalyzeArgs& a) {
  json req;
  req["dataset"] = dataset_json(a.data);
  req["model"] = a.model;
  json options = json::object();
  if (!a.exclude.empty()) options["exclude_ids"] = a.exclude;
  if (!a.metric.empty()) options["precision_metric"] = a.metric;
  if (a.ci_level != 0.95) options["ci_level"] = a.ci_level;
  if (!a.tau2.empty()) options["tau2_method"] = a.tau2;
  if (!a.interval.empty()) options["interval"] = a.interval;
  req["options"] = options;
  return req;
}

json mr_request(const MRArgs& a) {
  json req;
  req["dataset"] = dataset_json(a.data);
  req["method"] = a.method;
  json options = json::object();
  if (!a.exclude.empty()) options["exclude_ids"] = a.exclude;
  if (a.ci_level != 0.95) options["ci_level"] = a.ci_level;
  if (!a.interval.empty()) options["interval"] = a.interval;
  req["options"] = options;
  return req;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "-"; }

std::string p_text(const std::optional<double>& p) {
  if (!p) return "-";
  if (*p < 1e-16) return "<1e-16";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", *p);
  return buf;
}

void row(std::ostream& out, const std::string& name, const std::string& est, const std::string& se,
         const std::string& stat, const std::string& p) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-14s %12s %12s %10s %10s\n", name.c_str(), est.c_str(), se.c_str(),
                stat.c_str(), p.c_str());
  out << buf;
}

void coefficient_row(std::ostream& out, const std::string& name, const Coefficient& c) {
  row(out, name, num(c.estimate), num(c.se), opt_num(c.statistic), p_text(c.p_value));
}

void print_table(std::ostream& out, const io::ResultEnvelope& env) {
  const ModelFit& fit = env.fit;
  const std::string ref = fit.egger ? std::string(to_string(fit.egger->interval.kind))
                                    : std::string(to_string(fit.pooled.interval.kind));
  out << "Model: " << to_string(fit.tag);
  if (env.mr) out << " (MR " << env.mr->method << ")";
  out << "   k = " << fit.pooled.weights.size() << "\n";
  row(out, "Parameter", "Est", "S.E", ref + " value", "p-value");

  const Heterogeneity& h = fit.heterogeneity;
  if (fit.egger) {
    coefficient_row(out, "beta0", fit.egger->beta0);
    coefficient_row(out, "mu", fit.egger->mu);
    row(out, "phi", num(fit.egger->phi), "-", "-", "-");
    if (env.mr && env.mr->pleiotropy) {
      row(out, "sigma2_beta0",
          env.mr->pleiotropy->identified() ? num(*env.mr->pleiotropy->sigma2_beta0) : "not identified",
          "-", "-", "-");
    }
  } else {
    coefficient_row(out, "mu", fit.pooled.coefficient());
    if (fit.tag == ModelTag::re_additive_dl || fit.tag == ModelTag::re_additive_pm) {
      row(out, fit.tag == ModelTag::re_additive_dl ? "tau2_DL" : "tau2_PM", num(h.tau2), "-", "-", "-");
    }
    if (h.phi) row(out, "phi", num(*h.phi), "-", "-", "-");
  }
  out << "Q = " << num(h.q) << " (df = " << num(h.df) << "), I2 = " << num(100.0 * h.i2) << "%\n";
  const Coefficient mu = fit.pooled.coefficient();
  out << num(100.0 * fit.pooled.interval.level) << "% CI for mu: [" << num(mu.ci_low) << ", "
      << num(mu.ci_high) << "]\n";

  out << "\nStudy          y/x          height       mass%        hole\n";
  for (const BalanceMass& m : env.balance.masses) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%-14s %-12s %-12s %-12s %s%s\n", m.id.c_str(), num(m.x).c_str(),
                  m.height ? num(*m.height).c_str() : "inf", num(m.mass_pct).c_str(),
                  num(m.hole_len).c_str(), m.excluded ? "  (excluded)" : "");
    out << buf;
  }
  for (const std::string& n : env.notes) out << "note: " << n << "\n";
  out << "p-values: normal reference for pooled mu, t(k-2) for Egger coefficients"
         " (overridable with --interval).\n";
}

void print_loo_table(std::ostream& out, const std::string& body) {
  const json doc = json::parse(body);
  out << "Leave-one-out, model " << doc.at("model").get<std::string>() << "\n";
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-14s %12s %12s %12s %12s\n", "excluded", "mu", "S.E", "tau2", "I2%");
  out << buf;
  for (const json& e : doc.at("entries")) {
    const std::string id = e.at("excluded_id").get<std::string>();
    if (!e.at("error").is_null()) {
      out << id << ": " << e.at("error").get<std::string>() << "\n";
      continue;
    }
    const json& mu = e.at("estimates").at("mu");
    const json& h = e.at("heterogeneity");
    std::snprintf(buf, sizeof(buf), "%-14s %12s %12s %12s %12s\n", id.c_str(),
                  num(mu.at("estimate").get<double>()).c_str(), num(mu.at("se").get<double>()).c_str(),
                  num(h.at("tau2").get<double>()).c_str(), num(100.0 * h.at("i2").get<double>()).c_str());
    out << buf;
  }
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const RegressionError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Meta-analysis balance engine: pooling, Egger regression and MR on summary data"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* cmd_analyze = app.add_subcommand("analyze", "Pool a study dataset under one model");
  auto* cmd_loo = app.add_subcommand("leave-one-out", "Refit with each study excluded in turn");
  for (CLI::App* cmd : {cmd_analyze, cmd_loo}) {
    add_dataset_options(cmd, analyze.data);
    cmd->add_option("--model", analyze.model, "fixed | re_additive | re_additive_dl | re_additive_pm | "
                                               "re_multiplicative | egger");
    cmd->add_option("--tau2", analyze.tau2, "tau^2 estimator for re_additive")
        ->check(CLI::IsMember({"dl", "pm"}));
    cmd->add_option("--exclude", analyze.exclude, "Study ids to exclude")->delimiter(',');
    cmd->add_option("--metric", analyze.metric, "Egger precision metric")
        ->check(CLI::IsMember({"inv_se", "inv_n"}));
    cmd->add_option("--ci-level", analyze.ci_level, "Confidence level")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--interval", analyze.interval, "Reference distribution")
        ->check(CLI::IsMember({"z", "t"}));
    cmd->add_option("--out", analyze.out, "Output format")->check(CLI::IsMember({"table", "json"}));
  }

  MRArgs mr;
  auto* cmd_mr = app.add_subcommand("mr-analyze", "Mendelian randomization from summary associations");
  add_dataset_options(cmd_mr, mr.data);
  cmd_mr->add_option("--method", mr.method, "ivw | egger")->check(CLI::IsMember({"ivw", "egger"}));
  cmd_mr->add_option("--exclude", mr.exclude, "Variant ids to exclude")->delimiter(',');
  cmd_mr->add_option("--ci-level", mr.ci_level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  cmd_mr->add_option("--interval", mr.interval, "Reference distribution")->check(CLI::IsMember({"z", "t"}));
  cmd_mr->add_option("--out", mr.out, "Output format")->check(CLI::IsMember({"table", "json"}));

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  cmd_sim->add_option("--model", sim.model, "eq1 | eq3 | eq4 | eq8 | eq10 | eq12")
      ->required()
      ->check(CLI::IsMember({"eq1", "eq3", "eq4", "eq8", "eq10", "eq12"}));
  cmd_sim->add_option("--k", sim.k, "Number of studies")->required();
  cmd_sim->add_option("--seed", sim.seed, "Seed");
  cmd_sim->add_option("--mu", sim.params.mu);
  cmd_sim->add_option("--tau2", sim.params.tau2);
  cmd_sim->add_option("--phi", sim.params.phi);
  cmd_sim->add_option("--beta0", sim.params.beta0);
  cmd_sim->add_option("--sigma2-beta0", sim.params.sigma2_beta0);
  cmd_sim->add_option("--s-min", sim.params.s_min);
  cmd_sim->add_option("--s-max", sim.params.s_max);
  cmd_sim->add_option("--format", sim.format)->check(CLI::IsMember({"csv", "json"}));
  cmd_sim->add_flag("--as-studies", sim.as_studies, "Emit eq12 as Wald-ratio studies instead of an MR panel");

  int port = 0;
  std::string host = "127.0.0.1";
  auto* cmd_serve = app.add_subcommand("serve", "Run the HTTP analysis service");
  cmd_serve->add_option("--port", port, "Port (default: $META_BALANCER_PORT or 8080)");
  cmd_serve->add_option("--host", host, "Bind address");

  std::vector<const char*> argv{"metabal"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (CLI::App* sub : app.get_subcommands()) err << sub->help();
    return 2;
  }

  if (cmd_analyze->parsed()) {
    return guarded(err, [&] {
      const json req = analysis_request(analyze);
      if (analyze.out == "json") {
        out << engine::handle_analyze(req);
      } else {
        print_table(out, engine::analyze(engine::parse_analysis_request(req)));
      }
    });
  }
  if (cmd_loo->parsed()) {
    return guarded(err, [&] {
      const std::string body = engine::handle_leave_one_out(analysis_request(analyze));
      if (analyze.out == "json") {
        out << body;
      } else {
        print_loo_table(out, body);
      }
    });
  }
  if (cmd_mr->parsed()) {
    return guarded(err, [&] {
      const json req = mr_request(mr);
      if (mr.out == "json") {
        out << engine::handle_mr(req);
      } else {
        print_table(out, engine::analyze_mr(engine::parse_mr_request(req)));
      }
    });
  }
  if (cmd_sim->parsed()) {
    return guarded(err, [&] {
      const SimModel model = *parse_sim_model(sim.model);
      const io::Format format = *io::parse_format(sim.format);
      if (model == SimModel::eq12 && !sim.as_studies) {
        out << io::serialize_mr(simulate_mr(sim.params, sim.k, sim.seed), format);
      } else {
        out << io::serialize_studies(simulate_studies(model, sim.params, sim.k, sim.seed), format);
      }
    });
  }
  if (cmd_serve->parsed()) {
    return service::serve(host, service::resolve_port(port));
  }
  return 2;
}

}  // namespace metabal::cli
