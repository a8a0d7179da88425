#pragma once

#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "contexta/service/sync.hpp"
#include "json.hpp"

namespace contexta::service {

/// HTTP status for an exception escaping a handler.
int http_status(const std::exception& e);

/// REST + server-sent-events frontend over a SyncService. Routes live under
/// /api/v1 except GET /healthz.
class HttpServer {
 public:
  struct Options {
    std::size_t threads = 64;
    std::chrono::milliseconds keepalive{15'000};
  };

  explicit HttpServer(SyncService& svc);
  HttpServer(SyncService& svc, Options opts);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving yet; port 0 picks a free port. Throws BindFailure.
  int bind(const std::string& host, int port);
  /// Binds to "host:port".
  int bind(const std::string& addr);
  void run();    // blocks until stop()
  void start();  // serves on a background thread
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Thin client for the same API, used by the CLI replay sink. Non-2xx
/// responses are rethrown as the matching contexta error; transport failures
/// become BackendUnavailable.
class SyncClient {
 public:
  explicit SyncClient(const std::string& baseUrl, std::string token = {});
  ~SyncClient();

  void set_token(std::string token) { token_ = std::move(token); }
  void register_user(const std::string& userId, const std::string& secret);
  std::string login(const std::string& userId, const std::string& secret);
  UploadAck upload(const nlohmann::json& batch);
  std::vector<ControlCommand> poll_control(std::uint64_t after);

 private:
  nlohmann::json call(const std::string& method, const std::string& path, const std::string& body,
                      int* status = nullptr);

  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string token_;
};

}  // namespace contexta::service
