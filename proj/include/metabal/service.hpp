#pragma once

#include <functional>
#include <memory>
#include <string>

namespace metabal::service {

/// Stateless HTTP front end over the engine:
///   POST /v1/analyze, /v1/mr, /v1/leave-one-out, /v1/egger; GET /v1/health.
/// Validation failures answer 400 with a machine-readable body; anything
/// unexpected answers 500 with an opaque error id only.
class Server {
 public:
  Server();
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds host:port; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Blocks.
  bool listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Port from --port, else META_BALANCER_PORT, else 8080.
int resolve_port(int cli_port);

/// Runs the service until SIGINT/SIGTERM.
int serve(const std::string& host, int port);

}  // namespace metabal::service
