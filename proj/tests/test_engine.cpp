#include "oracles.hpp"

#include "metabal/cli.hpp"
#include "metabal/engine.hpp"
#include "metabal/errors.hpp"
#include "metabal/io.hpp"
#include "metabal/service.hpp"
#include "metabal/simulate.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

using namespace metabal;
using nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempFile {
 public:
  explicit TempFile(const std::string& content, const std::string& ext = ".csv") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("metabal_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ext);
    std::ofstream(path_) << content;
  }
  ~TempFile() { std::filesystem::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

class RunningServer {
 public:
  RunningServer() {
    port_ = server_.bind("127.0.0.1", 0);
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen(); });
    for (int i = 0; i < 200 && !server_.running(); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  ~RunningServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  service::Server server_;
  std::thread thread_;
  int port_ = -1;
};

json inline_csv(const std::string& csv) { return {{"format", "csv"}, {"content", csv}}; }

std::string csv_of(const oracle::Data& d) {
  std::string text = "id,y,se\n";
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    text += "s" + std::to_string(i + 1) + "," + io::format_double(d.y[i]) + "," + io::format_double(d.se[i]) + "\n";
  }
  return text;
}

}  // namespace

TEST_CASE("CLI: single study table") {
  const TempFile file("id,y,se\nonly,0.42,0.13\n");
  const CliResult r = run_cli({"analyze", "--input", file.path(), "--model", "fixed"});
  CHECK(r.code == 0);
  CHECK(r.out.find("Model: fixed") != std::string::npos);
  CHECK(r.out.find("0.42") != std::string::npos);
  CHECK(r.out.find("0.13") != std::string::npos);
  CHECK(r.out.find("only") != std::string::npos);
  CHECK(r.out.find("p-value") != std::string::npos);
}

TEST_CASE("CLI: exit codes") {
  CHECK(run_cli({"analyze", "--bogus"}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"analyze", "--input", "/nonexistent/file.csv"}).code == 2);

  const TempFile bad("id,y,se\na,1,-1\n");
  const CliResult r = run_cli({"analyze", "--input", bad.path()});
  CHECK(r.code == 2);
  CHECK(r.err.find("se") != std::string::npos);

  const TempFile one("id,y,se\na,1,1\n");
  CHECK(run_cli({"analyze", "--input", one.path(), "--model", "egger"}).code == 2);
  CHECK(run_cli({"analyze", "--input", one.path(), "--model", "nonsense"}).code == 2);
  CHECK(run_cli({"analyze", "--input", one.path(), "--exclude", "zzz"}).code == 2);
}

TEST_CASE("CLI: Paule-Mandel matches the grid oracle") {
  std::mt19937_64 rng(404);
  oracle::Data d;
  do {
    d = oracle::random_data(rng, 10, 0.5);
  } while (oracle::generalized_q(d, 0.0) <= 9.0);
  const TempFile file(csv_of(d));
  const CliResult r = run_cli({"analyze", "--input", file.path(), "--model", "re_additive_pm", "--out", "json"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  const double tau2 = doc["heterogeneity"]["tau2"].get<double>();
  CHECK(std::abs(tau2 - oracle::pm_grid(d, 3.0)) < 1e-5);
}

TEST_CASE("CLI: simulate is deterministic and feeds analyze") {
  const CliResult a = run_cli({"simulate", "--model", "eq3", "--k", "12", "--seed", "5", "--tau2", "0.2"});
  const CliResult b = run_cli({"simulate", "--model", "eq3", "--k", "12", "--seed", "5", "--tau2", "0.2"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(io::parse_studies(a.out, io::Format::csv) ==
        simulate_studies(SimModel::eq3, SimParams{.tau2 = 0.2}, 12, 5));
  const TempFile file(a.out);
  CHECK(run_cli({"leave-one-out", "--input", file.path(), "--model", "re_additive_dl"}).code == 0);
  CHECK(run_cli({"simulate", "--model", "eq3", "--k", "5", "--tau2", "-1"}).code == 2);

  const CliResult mr = run_cli({"simulate", "--model", "eq12", "--k", "20", "--seed", "1", "--beta0", "0.2"});
  REQUIRE(mr.code == 0);
  const TempFile mr_file(mr.out);
  const CliResult fit = run_cli({"mr-analyze", "--input", mr_file.path(), "--method", "egger"});
  CHECK(fit.code == 0);
  CHECK(fit.out.find("beta0") != std::string::npos);
  CHECK(fit.out.find("t value") != std::string::npos);
}

TEST_CASE("engine: model resolution") {
  engine::AnalysisOptions opts;
  CHECK(engine::resolve_model("fixed", opts).spec.tag == ModelTag::fixed);
  CHECK(engine::resolve_model("re_additive", opts).spec.tag == ModelTag::re_additive_pm);
  opts.tau2_method = engine::Tau2Method::dl;
  CHECK(engine::resolve_model("re_additive", opts).spec.tag == ModelTag::re_additive_dl);
  const engine::ResolvedModel fixed = engine::resolve_model("fixed", opts);
  CHECK(fixed.spec.tag == ModelTag::fixed);
  CHECK(fixed.warnings.size() == 1);
  CHECK_THROWS_AS(engine::resolve_model("re_additive_pm", opts), ValidationError);
  CHECK_THROWS_AS(engine::resolve_model("random", {}), ValidationError);
  opts = {};
  opts.ci_level = 1.5;
  CHECK_THROWS_AS(engine::resolve_model("fixed", opts), ValidationError);
}

TEST_CASE("engine: request parsing is strict") {
  const json base = {{"dataset", inline_csv("id,y,se\na,1,1\n")}, {"model", "fixed"}};
  CHECK_NOTHROW(engine::parse_analysis_request(base));
  json extra = base;
  extra["verbose"] = true;
  CHECK_THROWS_AS(engine::parse_analysis_request(extra), ValidationError);
  json bad_opt = base;
  bad_opt["options"] = {{"exclude", json::array()}};
  CHECK_THROWS_AS(engine::parse_analysis_request(bad_opt), ValidationError);
  json mr_opt = {{"dataset", inline_csv("id,mu_xg,se_xg,mu_yg,se_yg\na,1,1,1,1\n")},
                 {"options", {{"precision_metric", "inv_n"}}}};
  CHECK_THROWS_AS(engine::parse_mr_request(mr_opt), ValidationError);
  const engine::AnalysisRequest req = engine::parse_analysis_request(base);
  CHECK(engine::parse_analysis_request(engine::to_json(req)).model == "fixed");
}

TEST_CASE("service: endpoints") {
  RunningServer server;
  httplib::Client client = server.client();

  SUBCASE("health") {
    auto res = client.Get("/v1/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json body = json::parse(res->body);
    CHECK(body["status"] == "ok");
    CHECK(body["schema_version"] == "1");
  }
  SUBCASE("unknown exclude id") {
    const json req = {{"dataset", inline_csv("id,y,se\na,1,1\nb,2,1\n")},
                      {"model", "fixed"},
                      {"options", {{"exclude_ids", {"ghost_study"}}}}};
    auto res = client.Post("/v1/analyze", req.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    const json body = json::parse(res->body);
    CHECK(body["schema_version"] == "1");
    CHECK(body["error"]["code"] == "validation_error");
    CHECK(body["error"]["field"] == "options.exclude_ids");
    CHECK(body["error"]["message"].get<std::string>().find("ghost_study") != std::string::npos);
  }
  SUBCASE("malformed bodies and unknown routes") {
    auto res = client.Post("/v1/analyze", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"]["code"] == "malformed_request");
    res = client.Post("/v1/analyze", R"({"dataset":{"format":"csv","content":"id,y,se\na,1,0\n"}})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"]["row"] == 2);
    res = client.Get("/v2/nothing");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body)["schema_version"] == "1");
  }
  SUBCASE("egger, mr and leave-one-out") {
    const std::string csv = io::serialize_studies(
        simulate_studies(SimModel::eq8, SimParams{.beta0 = 1.0}, 15, 2), io::Format::csv);
    auto res = client.Post("/v1/egger", json{{"dataset", inline_csv(csv)}, {"model", "egger"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["estimates"]["egger"]["beta0"].is_object());
    res = client.Post("/v1/egger", json{{"dataset", inline_csv(csv)}, {"model", "fixed"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = client.Post("/v1/leave-one-out", json{{"dataset", inline_csv(csv)}, {"model", "re_additive_dl"}}.dump(),
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["entries"].size() == 15);

    const std::string mr = io::serialize_mr(simulate_mr(SimParams{.mu = 0.3}, 25, 3), io::Format::csv);
    res = client.Post("/v1/mr", json{{"dataset", inline_csv(mr)}, {"method", "egger"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json body = json::parse(res->body);
    CHECK(body["schema_version"] == "1");
    CHECK(body["mr"]["method"] == "egger");
  }
}

TEST_CASE("service: CLI parity and statelessness") {
  RunningServer server;
  std::vector<std::string> files_text;
  std::vector<json> requests;
  const char* models[] = {"fixed", "re_additive_dl", "re_additive_pm", "re_multiplicative", "egger"};
  for (int i = 0; i < 10; ++i) {
    const std::string csv = io::serialize_studies(
        simulate_studies(SimModel::eq12, SimParams{.beta0 = 0.4, .sigma2_beta0 = 0.5}, 8 + static_cast<std::size_t>(i), 100 + static_cast<std::uint64_t>(i)),
        io::Format::csv);
    json req = {{"dataset", inline_csv(csv)}, {"model", models[i % 5]}};
    if (i % 3 == 0) req["options"] = {{"exclude_ids", {"s2"}}};
    requests.push_back(req);
    files_text.push_back(csv);
  }

  std::vector<std::string> serial;
  {
    httplib::Client client = server.client();
    for (std::size_t i = 0; i < requests.size(); ++i) {
      auto res = client.Post("/v1/analyze", requests[i].dump(), "application/json");
      REQUIRE(res);
      REQUIRE(res->status == 200);
      serial.push_back(res->body);

      const TempFile file(files_text[i]);
      std::vector<std::string> args{"analyze", "--input", file.path(), "--model", requests[i]["model"], "--out", "json"};
      if (requests[i].contains("options")) {
        args.push_back("--exclude");
        args.push_back("s2");
      }
      const CliResult cli = run_cli(args);
      REQUIRE(cli.code == 0);
      CHECK(cli.out == res->body);
    }
  }

  std::vector<std::vector<std::string>> seen(4);
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < seen.size(); ++t) {
    workers.emplace_back([&, t] {
      httplib::Client client = server.client();
      for (std::size_t j = 0; j < requests.size(); ++j) {
        const std::size_t i = (j * 7 + t * 3) % requests.size();
        auto res = client.Post("/v1/analyze", requests[i].dump(), "application/json");
        seen[t].push_back(res && res->status == 200 && res->body == serial[i] ? "ok" : "mismatch");
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& results : seen) {
    for (const auto& r : results) CHECK(r == "ok");
  }
}

TEST_CASE("service: port resolution") {
  ::unsetenv("META_BALANCER_PORT");
  CHECK(service::resolve_port(0) == 8080);
  ::setenv("META_BALANCER_PORT", "9123", 1);
  CHECK(service::resolve_port(0) == 9123);
  CHECK(service::resolve_port(7000) == 7000);
  ::unsetenv("META_BALANCER_PORT");
}
