#include "contexta/service/http.hpp"

#include <charconv>
#include <thread>

#include "contexta/error.hpp"
#include "httplib.h"

namespace contexta::service {

using json = nlohmann::json;

int http_status(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 500;
  const auto& c = err->code();
  if (c == "AuthFailure" || c == "InvalidCredentials" || c == "ExpiredToken") return 401;
  if (c == "Forbidden") return 403;
  if (c == "UnknownMessage") return 404;
  if (c == "DuplicateUser" || c == "StaleBatch" || c == "NoActiveReplay") return 409;
  if (c == "MalformedBatch" || c == "MalformedRecord" || c == "SchemaViolation" || c == "UnknownEmoji" ||
      c == "BadRequest")
    return 400;
  return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  json j = {{"error", err ? err->code() : std::string("Internal")}, {"message", e.what()}};
  send_json(res, http_status(e), j.dump());
}

json body_json(const httplib::Request& req) {
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BadRequest("request body must be a JSON object");
  return j;
}

std::string body_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw BadRequest(std::string("missing string field '") + key + "'");
  return j[key].get<std::string>();
}

template <typename T>
T param_num(const httplib::Request& req, const char* name, T fallback) {
  if (!req.has_param(name)) return fallback;
  const auto s = req.get_param_value(name);
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw BadRequest(std::string("query parameter '") + name + "' is not a number");
  }
  return v;
}

std::string bearer(const httplib::Request& req) {
  const auto h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) {
    throw AuthFailure("missing bearer token");
  }
  return h.substr(prefix.size());
}

std::string sse_frame(const StreamEvent& e) {
  return "id: " + std::to_string(e.id) + "\nevent: " + e.type + "\ndata: " + e.data + "\n\n";
}

}  // namespace

struct HttpServer::Impl {
  SyncService& svc;
  Options opts;
  httplib::Server server;
  std::thread thread;
  int port = -1;
  std::atomic<bool> stopping{false};

  Impl(SyncService& s, Options o) : svc(s), opts(o) {}

  using Handler = std::function<void(const httplib::Request&, httplib::Response&, const std::string& subject)>;

  // Authenticated handler; `user` (query or body userId) must name the caller.
  httplib::Server::Handler authed(Handler h) {
    return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto subject = svc.authenticate(bearer(req));
        if (req.has_param("user")) SyncService::check_tenant(subject, req.get_param_value("user"));
        h(req, res, subject);
      } catch (const std::exception& e) {
        send_error(res, e);
      }
    };
  }

  httplib::Server::Handler open(std::function<void(const httplib::Request&, httplib::Response&)> h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const std::exception& e) {
        send_error(res, e);
      }
    };
  }

  void routes() {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });

    server.Post("/api/v1/auth/register", open([this](const httplib::Request& req, httplib::Response& res) {
      const auto j = body_json(req);
      const auto user = body_string(j, "userId");
      svc.register_user(user, body_string(j, "secret"));
      send_json(res, 201, json{{"userId", user}}.dump());
    }));

    server.Post("/api/v1/auth/login", open([this](const httplib::Request& req, httplib::Response& res) {
      const auto j = body_json(req);
      const auto token = svc.login(body_string(j, "userId"), body_string(j, "secret"));
      send_json(res, 200, json{{"token", token}, {"expiresIn", svc.config().tokenTtlMs / 1000}}.dump());
    }));

    server.Post("/api/v1/sync/upload", authed([this](const httplib::Request& req, httplib::Response& res,
                                                     const std::string& subject) {
      auto j = json::parse(req.body, nullptr, false);
      if (j.is_discarded()) throw MalformedBatch("body is not JSON");
      const auto ack = svc.upload(subject, j);
      if (ack.replayed) res.set_header("X-Idempotent-Replay", "true");
      send_json(res, 200, ack.to_json());
    }));

    server.Get(R"(/api/v1/records/([a-z]+))", authed([this](const httplib::Request& req, httplib::Response& res,
                                                            const std::string& subject) {
      const auto type = record_type_from_string(req.matches[1].str());
      if (!type) throw BadRequest("unknown record type '" + req.matches[1].str() + "'");
      const auto since = param_num<std::int64_t>(req, "since", 0);
      const auto limit = param_num<std::size_t>(req, "limit", kDefaultPageSize);
      if (limit == 0) throw BadRequest("limit must be positive");
      std::optional<std::string> cursor;
      if (req.has_param("cursor")) cursor = req.get_param_value("cursor");
      send_json(res, 200, svc.query(subject, *type, since, limit, cursor).to_json());
    }));

    server.Post("/api/v1/feedback", authed([this](const httplib::Request& req, httplib::Response& res,
                                                  const std::string& subject) {
      const auto j = body_json(req);
      if (j.contains("userId") && j["userId"].is_string()) SyncService::check_tenant(subject, j["userId"]);
      std::optional<std::int64_t> t;
      if (j.contains("t") && j["t"].is_number_integer()) t = j["t"].get<std::int64_t>();
      const auto rec = svc.feedback(subject, body_string(j, "messageId"), body_string(j, "emoji"), t);
      send_json(res, 201, serialize_feedback(rec));
    }));

    server.Get("/api/v1/feedback", authed([this](const httplib::Request& req, httplib::Response& res,
                                                 const std::string& subject) {
      if (!req.has_param("messageId")) throw BadRequest("messageId is required");
      const auto id = req.get_param_value("messageId");
      if (!svc.store(subject).has_message(id)) throw UnknownMessage(id);
      std::string out = "{\"records\":[";
      const auto recs = svc.feedback_for(subject, id);
      for (std::size_t i = 0; i < recs.size(); ++i) out += (i ? "," : "") + serialize_feedback(recs[i]);
      send_json(res, 200, out + "]}");
    }));

    server.Post("/api/v1/replay/control", authed([this](const httplib::Request& req, httplib::Response& res,
                                                        const std::string& subject) {
      const auto j = body_json(req);
      if (j.contains("userId") && j["userId"].is_string()) SyncService::check_tenant(subject, j["userId"]);
      double value = 0.0;
      if (j.contains("value")) {
        if (!j["value"].is_number()) throw BadRequest("value must be a number");
        value = j["value"].get<double>();
      }
      const auto seq = svc.control(subject).post(body_string(j, "command"), value, svc.now());
      send_json(res, 202, json{{"seq", seq}}.dump());
    }));

    server.Get("/api/v1/replay/control", authed([this](const httplib::Request& req, httplib::Response& res,
                                                       const std::string& subject) {
      const auto after = param_num<std::uint64_t>(req, "after", 0);
      json out = {{"commands", json::array()}};
      for (const auto& c : svc.control(subject).poll(after, svc.now())) {
        out["commands"].push_back({{"seq", c.seq}, {"command", c.command}, {"value", c.value}});
      }
      send_json(res, 200, out.dump());
    }));

    server.Get("/api/v1/replay/status", authed([this](const httplib::Request&, httplib::Response& res,
                                                      const std::string& subject) {
      send_json(res, 200, json{{"active", svc.control(subject).active(svc.now())}}.dump());
    }));

    server.Get("/api/v1/stream", authed([this](const httplib::Request& req, httplib::Response& res,
                                               const std::string& subject) { stream(req, res, subject); }));
  }

  void stream(const httplib::Request& req, httplib::Response& res, const std::string& subject) {
    EventHub* hub = &svc.hub(subject);
    std::optional<std::uint64_t> resume;
    if (req.has_header("Last-Event-ID")) {
      const auto h = req.get_header_value("Last-Event-ID");
      std::uint64_t v = 0;
      if (std::from_chars(h.data(), h.data() + h.size(), v).ec != std::errc()) {
        throw BadRequest("Last-Event-ID is not a number");
      }
      resume = v;
    } else if (req.has_param("lastEventId")) {
      resume = param_num<std::uint64_t>(req, "lastEventId", 0);
    }
    struct State {
      std::uint64_t cursor;
      std::chrono::steady_clock::time_point lastWrite = std::chrono::steady_clock::now();
      bool opened = false;
    };
    auto st = std::make_shared<State>(State{resume.value_or(hub->last_id())});
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, hub, st](std::size_t, httplib::DataSink& sink) {
      if (stopping || svc.stopping() || hub->closed()) {
        sink.done();
        return true;
      }
      bool gap = false;
      const auto events = hub->after(st->cursor, &gap);
      std::string out;
      if (!st->opened) {
        out = ": open\n\n";  // lets clients know the subscription is live
        st->opened = true;
      }
      if (gap) {
        const auto resumeAt = events.empty() ? hub->last_id() : events.front().id - 1;
        out += "event: gap\ndata: {\"from\":" + std::to_string(st->cursor + 1) + ",\"to\":" +
               std::to_string(resumeAt) + "}\n\n";
        st->cursor = resumeAt;
      }
      for (const auto& e : events) {
        out += sse_frame(e);
        st->cursor = e.id;
      }
      const auto now = std::chrono::steady_clock::now();
      if (out.empty() && now - st->lastWrite >= opts.keepalive) out = ": keepalive\n\n";
      if (!out.empty()) {
        if (!sink.write(out.data(), out.size())) return false;
        st->lastWrite = now;
        return true;
      }
      hub->wait(st->cursor, std::chrono::milliseconds(250));
      return sink.is_writable();
    });
  }
};

HttpServer::HttpServer(SyncService& svc) : HttpServer(svc, Options{}) {}

HttpServer::HttpServer(SyncService& svc, Options opts) : impl_(std::make_unique<Impl>(svc, opts)) {
  const auto threads = opts.threads;
  impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  // no SO_REUSEPORT: a second server on a taken port must fail to bind
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) throw BindFailure("cannot bind " + host + ":" + std::to_string(port));
  return impl_->port;
}

int HttpServer::bind(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw BadConfig("bind address must be host:port, got '" + addr + "'");
  int port = 0;
  const auto ps = addr.substr(colon + 1);
  auto [p, ec] = std::from_chars(ps.data(), ps.data() + ps.size(), port);
  if (ec != std::errc() || p != ps.data() + ps.size() || port < 0 || port > 65535) {
    throw BadConfig("bad port in bind address '" + addr + "'");
  }
  return bind(addr.substr(0, colon), port);
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int HttpServer::port() const { return impl_->port; }

// ---- client ---------------------------------------------------------------

struct SyncClient::Impl {
  httplib::Client client;
  explicit Impl(const std::string& url) : client(url) {
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
  }
};

SyncClient::SyncClient(const std::string& baseUrl, std::string token)
    : impl_(std::make_unique<Impl>(baseUrl)), token_(std::move(token)) {
  if (!impl_->client.is_valid()) throw BadConfig("bad service URL '" + baseUrl + "'");
}

SyncClient::~SyncClient() = default;

json SyncClient::call(const std::string& method, const std::string& path, const std::string& body, int* status) {
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto r = method == "GET" ? impl_->client.Get(path, headers)
                           : impl_->client.Post(path, headers, body, "application/json");
  if (!r) throw BackendUnavailable("sync service unreachable: " + httplib::to_string(r.error()));
  if (status) *status = r->status;
  auto j = json::parse(r->body, nullptr, false);
  if (r->status >= 200 && r->status < 300) {
    if (j.is_discarded()) throw BackendUnavailable("sync service sent a non-JSON body");
    if (r->has_header("X-Idempotent-Replay")) j["replayed"] = true;
    return j;
  }
  const std::string code = j.is_object() ? j.value("error", "") : "";
  const std::string msg = j.is_object() ? j.value("message", r->body) : r->body;
  if (code == "ExpiredToken") throw ExpiredToken();
  if (code == "InvalidCredentials") throw InvalidCredentials();
  if (r->status == 401) throw AuthFailure(msg);
  if (code == "Forbidden") throw Forbidden(msg);
  if (code == "StaleBatch") throw StaleBatch(msg);
  if (code == "MalformedBatch") throw MalformedBatch(msg);
  if (code == "NoActiveReplay") throw NoActiveReplay();
  throw Error(code.empty() ? "HttpError" : code, "HTTP " + std::to_string(r->status) + ": " + msg);
}

void SyncClient::register_user(const std::string& userId, const std::string& secret) {
  try {
    call("POST", "/api/v1/auth/register", json{{"userId", userId}, {"secret", secret}}.dump());
  } catch (const Error& e) {
    if (e.code() == "DuplicateUser") throw DuplicateUser(userId);
    throw;
  }
}

std::string SyncClient::login(const std::string& userId, const std::string& secret) {
  auto j = call("POST", "/api/v1/auth/login", json{{"userId", userId}, {"secret", secret}}.dump());
  token_ = j.at("token").get<std::string>();
  return token_;
}

UploadAck SyncClient::upload(const json& batch) {
  const auto j = call("POST", "/api/v1/sync/upload", batch.dump());
  return {j.at("batchId").get<std::string>(), j.at("serverWatermark").get<std::int64_t>(),
          j.at("accepted").get<std::size_t>(), j.value("replayed", false)};
}

std::vector<ControlCommand> SyncClient::poll_control(std::uint64_t after) {
  const auto j = call("GET", "/api/v1/replay/control?after=" + std::to_string(after), "");
  std::vector<ControlCommand> out;
  for (const auto& c : j.at("commands")) {
    out.push_back({c.at("seq").get<std::uint64_t>(), c.at("command").get<std::string>(), c.at("value").get<double>()});
  }
  return out;
}

}  // namespace contexta::service
