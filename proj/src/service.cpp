#include "metabal/service.hpp"

#include "metabal/engine.hpp"
#include "metabal/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace metabal::service {

namespace {

constexpr const char* kJson = "application/json";

std::string opaque_id() {
  static std::atomic<std::uint64_t> counter{0};
  const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%012llx-%04llx",
                static_cast<unsigned long long>(now) & 0xFFFFFFFFFFFFULL,
                static_cast<unsigned long long>(counter.fetch_add(1) & 0xFFFF));
  return buf;
}

template <typename Handler>
void respond(httplib::Response& res, Handler&& handler) {
  try {
    res.set_content(handler(), kJson);
    res.status = 200;
    return;
  } catch (const ValidationError& e) {
    res.status = 400;
    res.set_content(engine::error_body("validation_error", e.detail(), e.field(), e.row()), kJson);
  } catch (const nlohmann::json::exception& e) {
    res.status = 400;
    res.set_content(engine::error_body("malformed_request", e.what()), kJson);
  } catch (const DomainError& e) {
    res.status = 400;
    res.set_content(engine::error_body("domain_error", e.what()), kJson);
  } catch (const RegressionError& e) {
    res.status = 400;
    res.set_content(engine::error_body("regression_error", e.what()), kJson);
  } catch (const SolverError& e) {
    res.status = 400;
    res.set_content(engine::error_body("solver_error", e.what()), kJson);
  } catch (const std::exception& e) {
    const std::string id = opaque_id();
    std::cerr << "internal error " << id << ": " << e.what() << "\n";
    res.status = 500;
    res.set_content(engine::error_body("internal_error", "internal error " + id), kJson);
  } catch (...) {
    const std::string id = opaque_id();
    std::cerr << "internal error " << id << "\n";
    res.status = 500;
    res.set_content(engine::error_body("internal_error", "internal error " + id), kJson);
  }
}

template <typename Handler>
auto post_json(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return handler(nlohmann::json::parse(req.body)); });
  };
}

std::atomic<bool> g_stop_requested{false};

void on_signal(int) { g_stop_requested.store(true); }

}  // namespace

struct Server::Impl {
  httplib::Server http;
};

Server::Server() : impl_(std::make_unique<Impl>()) {
  auto& http = impl_->http;
  http.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    respond(res, [] { return engine::handle_health(); });
  });
  http.Post("/v1/analyze", post_json(engine::handle_analyze));
  http.Post("/v1/egger", post_json(engine::handle_egger));
  http.Post("/v1/mr", post_json(engine::handle_mr));
  http.Post("/v1/leave-one-out", post_json(engine::handle_leave_one_out));
  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(engine::error_body(res.status == 404 ? "not_found" : "http_error",
                                         "HTTP " + std::to_string(res.status)),
                      kJson);
    }
  });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::listen() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

bool Server::running() const { return impl_->http.is_running(); }

int resolve_port(int cli_port) {
  if (cli_port > 0) return cli_port;
  if (const char* env = std::getenv("META_BALANCER_PORT")) {
    const int port = std::atoi(env);
    if (port > 0 && port < 65536) return port;
  }
  return 8080;
}

int serve(const std::string& host, int port) {
  Server server;
  const int bound = server.bind(host, port);
  if (bound < 0) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  std::cerr << "listening on " << host << ":" << bound << "\n";
  g_stop_requested.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&server] {
    while (!g_stop_requested.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  server.listen();
  g_stop_requested.store(true);
  watcher.join();
  return 0;
}

}  // namespace metabal::service
