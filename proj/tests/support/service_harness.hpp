#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "contexta/service/http.hpp"
#include "contexta/service/sync.hpp"
#include "contexta/trace.hpp"
#include "contexta/trigger.hpp"
#include "httplib.h"
#include "json.hpp"

namespace contexta::testing {

namespace fs = std::filesystem;
using nlohmann::json;

/// A SyncService with a settable clock behind an HTTP server on a free port,
/// rooted in a fresh temp directory.
struct ServiceHarness {
  fs::path root;
  std::shared_ptr<std::atomic<std::int64_t>> now = std::make_shared<std::atomic<std::int64_t>>(1'700'000'000'000);
  std::unique_ptr<contexta::service::SyncService> svc;
  std::unique_ptr<contexta::service::HttpServer> http;
  int port = 0;

  explicit ServiceHarness(const std::string& tag, fs::path existing = {}) {
    if (existing.empty()) {
      std::random_device rd;
      root = fs::temp_directory_path() / ("contexta-" + tag + "-" + std::to_string(rd()));
      fs::remove_all(root);
    } else {
      root = std::move(existing);
    }
    start();
  }

  void start() {
    contexta::service::ServiceConfig cfg;
    cfg.dataRoot = root;
    cfg.jwtKey = "test-key-0123456789abcdef";
    cfg.pbkdf2Iterations = 1000;
    cfg.clock = [c = now] { return c->load(); };
    svc = std::make_unique<contexta::service::SyncService>(cfg);
    http = std::make_unique<contexta::service::HttpServer>(*svc);
    port = http->bind("127.0.0.1", 0);
    http->start();
  }

  void stop() {
    if (svc) svc->shutdown();
    http.reset();
    svc.reset();
  }

  ~ServiceHarness() {
    stop();
    std::error_code ec;
    fs::remove_all(root, ec);
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10);
    return c;
  }

  std::string token(const std::string& user, const std::string& secret = "pw-secret") {
    auto c = client();
    c.Post("/api/v1/auth/register", json{{"userId", user}, {"secret", secret}}.dump(), "application/json");
    auto r = c.Post("/api/v1/auth/login", json{{"userId", user}, {"secret", secret}}.dump(), "application/json");
    if (!r || r->status != 200) return {};
    return json::parse(r->body)["token"].get<std::string>();
  }
};

inline httplib::Headers auth(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

inline json sensor_rec(std::int64_t t, double lux = 10) {
  return {{"type", "sensor"},
          {"record", json::parse(contexta::serialize_event({t, contexta::Light{lux}}))}};
}

inline json trigger_rec(std::int64_t t, contexta::ScenarioId id = contexta::ScenarioId::Walking) {
  contexta::ScenarioTrigger tr{id, t, t - 60'000, t, {{"walkingMinutes", 30}}, "k" + std::to_string(t)};
  return {{"type", "trigger"}, {"record", json::parse(contexta::serialize_trigger(tr))}};
}

inline json message_rec(const std::string& id, std::int64_t t) {
  contexta::DialogueMessage m;
  m.messageId = id;
  m.scenarioId = contexta::ScenarioId::Walking;
  m.segments = {"Nice walk today."};
  m.joins = {};
  m.timestamp = t;
  return {{"type", "message"}, {"record", json::parse(contexta::serialize_message(m))}};
}

inline json feedback_rec(const std::string& messageId, const std::string& emoji, const std::string& user,
                         std::int64_t t) {
  return {{"type", "feedback"},
          {"record", json::parse(contexta::serialize_feedback({messageId, emoji, user, t}))}};
}

inline json batch(const std::string& id, const std::vector<json>& records) {
  std::int64_t wm = 0;
  for (const auto& r : records) {
    const auto& rec = r["record"];
    const auto t = rec.contains("firedAt") ? rec["firedAt"].get<std::int64_t>() : rec["t"].get<std::int64_t>();
    wm = std::max(wm, t);
  }
  return {{"batchId", id}, {"clientWatermark", wm}, {"records", records}};
}

struct SseEvent {
  std::uint64_t id = 0;
  std::string type;
  std::string data;
};

/// Reads server-sent events until `n` real events arrived, the stream ends or
/// reading times out. `on_open` runs once the subscription is live.
inline std::vector<SseEvent> read_stream(int port, const std::string& token, const std::string& query,
                                         std::size_t n, httplib::Headers extra = {},
                                         std::function<void()> on_open = {}) {
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(5);
  auto headers = auth(token);
  headers.insert(extra.begin(), extra.end());
  std::vector<SseEvent> out;
  std::string buf;
  c.Get("/api/v1/stream" + query, headers, [&](const char* data, std::size_t len) {
    buf.append(data, len);
    std::size_t end;
    while ((end = buf.find("\n\n")) != std::string::npos) {
      const auto frame = buf.substr(0, end);
      buf.erase(0, end + 2);
      if (frame.starts_with(":")) {
        if (frame == ": open" && on_open) on_open();
        continue;
      }
      SseEvent e;
      std::size_t pos = 0;
      while (pos < frame.size()) {
        auto nl = frame.find('\n', pos);
        if (nl == std::string::npos) nl = frame.size();
        const auto line = frame.substr(pos, nl - pos);
        if (line.starts_with("id: ")) e.id = std::stoull(line.substr(4));
        if (line.starts_with("event: ")) e.type = line.substr(7);
        if (line.starts_with("data: ")) e.data = line.substr(6);
        pos = nl + 1;
      }
      out.push_back(e);
    }
    return out.size() < n;
  });
  return out;
}

}  // namespace contexta::testing
