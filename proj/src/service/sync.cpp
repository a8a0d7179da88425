#include "contexta/service/sync.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "contexta/error.hpp"
#include "contexta/service/crypto.hpp"
#include "contexta/trace.hpp"
#include "contexta/trigger.hpp"

namespace contexta::service {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, kRecordTypeCount> kTypeNames = {"sensor", "trigger", "message",
                                                                        "feedback"};

std::string file_for(RecordType t) { return std::string(kTypeNames[static_cast<std::size_t>(t)]) + ".jsonl"; }

std::string row_line(std::uint64_t seq, std::int64_t t, const std::string& record) {
  return "{\"seq\":" + std::to_string(seq) + ",\"t\":" + std::to_string(t) + ",\"record\":" + record + "}\n";
}

std::string feedback_key(const std::string& messageId, const std::string& userId) {
  return messageId + '\n' + userId;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

struct Parsed {
  RecordType type;
  std::int64_t t;
  std::string json;
  std::string messageId;  // message and feedback
  std::string key;        // feedback
};

Parsed canonicalize(RecordType type, const json& rec, const std::string& userId, std::size_t i) {
  if (!rec.is_object()) throw MalformedBatch("records[" + std::to_string(i) + "].record must be an object");
  const std::string text = rec.dump();
  Parsed p{type, 0, {}, {}, {}};
  try {
    switch (type) {
      case RecordType::Sensor: {
        const auto e = parse_event(text, i);
        p.t = e.timestamp;
        p.json = serialize_event(e);
        break;
      }
      case RecordType::Trigger: {
        const auto tr = parse_trigger(text);
        p.t = tr.firedAt;
        p.json = serialize_trigger(tr);
        break;
      }
      case RecordType::Message: {
        const auto m = parse_message(text);
        p.t = m.timestamp;
        p.messageId = m.messageId;
        p.json = serialize_message(m);
        break;
      }
      case RecordType::Feedback: {
        auto f = parse_feedback(text);
        if (f.userId.empty()) f.userId = userId;
        if (f.userId != userId) throw Forbidden("feedback for another user");
        if (!in_palette(f.emoji)) throw MalformedBatch("records[" + std::to_string(i) + "]: emoji not in palette");
        p.t = f.timestamp;
        p.messageId = f.messageId;
        p.key = feedback_key(f.messageId, f.userId);
        p.json = serialize_feedback(f);
        break;
      }
    }
  } catch (const Forbidden&) {
    throw;
  } catch (const MalformedBatch&) {
    throw;
  } catch (const Error& e) {
    throw MalformedBatch("records[" + std::to_string(i) + "]: " + e.what());
  }
  return p;
}

}  // namespace

std::string_view to_string(RecordType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<RecordType> record_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kRecordTypeCount; ++i) {
    if (kTypeNames[i] == s) return static_cast<RecordType>(i);
  }
  return std::nullopt;
}

bool valid_user_id(std::string_view id) {
  if (id.empty() || id.size() > 64 || id[0] == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
  });
}

std::string UploadAck::to_json() const {
  nlohmann::ordered_json j;
  j["batchId"] = batchId;
  j["serverWatermark"] = serverWatermark;
  j["accepted"] = accepted;
  return j.dump();
}

std::string Page::to_json() const {
  std::string out = "{\"records\":[";
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out += ",";
    out += records[i].json;
  }
  out += "],\"nextCursor\":";
  out += nextCursor ? json(*nextCursor).dump() : "null";
  out += "}";
  return out;
}

// ---- TenantStore ----------------------------------------------------------

TenantStore::TenantStore(fs::path dir, std::string userId) : dir_(std::move(dir)), userId_(std::move(userId)) {
  fs::create_directories(dir_);
  load();
}

void TenantStore::load() {
  const auto statePath = dir_ / "state.json";
  if (fs::exists(statePath)) {
    const auto s = json::parse(read_all(statePath));
    watermark_ = s.value("watermark", std::int64_t{0});
    lastBatchId_ = s.value("lastBatchId", std::string());
    nextSeq_ = s.value("nextSeq", std::uint64_t{1});
  }
  for (std::size_t i = 0; i < kRecordTypeCount; ++i) {
    std::ifstream in(dir_ / file_for(static_cast<RecordType>(i)));
    std::string line;
    while (std::getline(in, line)) {
      const auto j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      const auto seq = j["seq"].get<std::uint64_t>();
      if (seq >= nextSeq_) continue;  // torn write past the committed state
      Row r{seq, j["t"].get<std::int64_t>(), j["record"].dump(), {}};
      const auto& rec = j["record"];
      if (i == static_cast<std::size_t>(RecordType::Message)) messages_.insert(rec["messageId"].get<std::string>());
      if (i == static_cast<std::size_t>(RecordType::Feedback)) {
        r.key = feedback_key(rec["messageId"].get<std::string>(), rec.value("userId", userId_));
        latestFeedback_[r.key] = rows_[i].size();
      }
      // keep the canonical text as written
      const auto start = line.find("\"record\":") + 9;
      r.json = line.substr(start, line.size() - start - 1);
      rows_[i].push_back(std::move(r));
    }
  }
  std::ifstream in(dir_ / "batches.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    UploadAck a;
    a.batchId = j["batchId"].get<std::string>();
    a.serverWatermark = j["serverWatermark"].get<std::int64_t>();
    a.accepted = j["accepted"].get<std::size_t>();
    if (a.serverWatermark <= watermark_) batches_[a.batchId] = a;
  }
}

void TenantStore::append_lines(const std::string& file, const std::string& text) {
  if (faultHook_) faultHook_(file);
  std::ofstream out(dir_ / file, std::ios::binary | std::ios::app);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("cannot append to " + file);
}

void TenantStore::write_state() {
  if (faultHook_) faultHook_("state.json");
  nlohmann::ordered_json s;
  s["userId"] = userId_;
  s["watermark"] = watermark_;
  s["lastBatchId"] = lastBatchId_;
  s["nextSeq"] = nextSeq_;
  write_atomic(dir_ / "state.json", s.dump() + "\n");
}

void TenantStore::set_fault_hook(std::function<void(const std::string&)> hook) {
  std::unique_lock lk(mu_);
  faultHook_ = std::move(hook);
}

UploadAck TenantStore::upload(const json& batch, std::vector<Committed>* committed) {
  if (!batch.is_object()) throw MalformedBatch("batch must be a JSON object");
  if (!batch.contains("batchId") || !batch["batchId"].is_string() || batch["batchId"].get<std::string>().empty()) {
    throw MalformedBatch("batchId is required");
  }
  if (!batch.contains("records") || !batch["records"].is_array()) throw MalformedBatch("records must be an array");
  const auto batchId = batch["batchId"].get<std::string>();

  std::unique_lock lk(mu_);
  if (auto it = batches_.find(batchId); it != batches_.end()) {
    auto ack = it->second;
    ack.replayed = true;
    return ack;
  }
  const auto& records = batch["records"];
  if (records.empty()) throw StaleBatch("empty batch");

  std::vector<Parsed> parsed;
  parsed.reserve(records.size());
  std::set<std::string> batchMessages;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.is_object() || !r.contains("type") || !r["type"].is_string() || !r.contains("record")) {
      throw MalformedBatch("records[" + std::to_string(i) + "] needs type and record");
    }
    const auto type = record_type_from_string(r["type"].get<std::string>());
    if (!type) throw MalformedBatch("records[" + std::to_string(i) + "]: unknown type");
    auto p = canonicalize(*type, r["record"], userId_, i);
    if (p.type == RecordType::Message) batchMessages.insert(p.messageId);
    if (p.type == RecordType::Feedback && !messages_.contains(p.messageId) && !batchMessages.contains(p.messageId)) {
      throw MalformedBatch("records[" + std::to_string(i) + "]: feedback for unknown message");
    }
    if (!parsed.empty() && p.t < parsed.back().t) {
      throw MalformedBatch("records must be sorted by timestamp");
    }
    parsed.push_back(std::move(p));
  }
  const std::int64_t maxT = parsed.back().t;
  if (!batch.contains("clientWatermark") || !batch["clientWatermark"].is_number_integer() ||
      batch["clientWatermark"].get<std::int64_t>() != maxT) {
    throw MalformedBatch("clientWatermark must equal the newest record timestamp");
  }
  if (parsed.front().t <= watermark_) {
    throw StaleBatch("records at or before the stored watermark " + std::to_string(watermark_));
  }

  // stage
  std::array<std::string, kRecordTypeCount> text;
  std::uint64_t seq = nextSeq_;
  std::vector<std::uint64_t> seqs;
  for (const auto& p : parsed) {
    seqs.push_back(seq);
    text[static_cast<std::size_t>(p.type)] += row_line(seq++, p.t, p.json);
  }
  UploadAck ack{batchId, maxT, parsed.size(), false};

  // write, rolling every touched file back on failure
  struct Touched {
    fs::path path;
    bool existed;
    std::uintmax_t size;
  };
  std::vector<Touched> touched;
  auto remember = [&](const std::string& file) {
    const auto p = dir_ / file;
    const bool existed = fs::exists(p);
    touched.push_back({p, existed, existed ? fs::file_size(p) : 0});
  };
  const auto savedWatermark = watermark_;
  const auto savedBatch = lastBatchId_;
  const auto savedSeq = nextSeq_;
  try {
    for (std::size_t i = 0; i < kRecordTypeCount; ++i) {
      if (text[i].empty()) continue;
      remember(file_for(static_cast<RecordType>(i)));
      append_lines(file_for(static_cast<RecordType>(i)), text[i]);
    }
    remember("batches.jsonl");
    append_lines("batches.jsonl", ack.to_json() + "\n");
    watermark_ = maxT;
    lastBatchId_ = batchId;
    nextSeq_ = seq;
    write_state();
  } catch (...) {
    watermark_ = savedWatermark;
    lastBatchId_ = savedBatch;
    nextSeq_ = savedSeq;
    for (const auto& f : touched) {
      std::error_code ec;
      if (f.existed) {
        fs::resize_file(f.path, f.size, ec);
      } else {
        fs::remove(f.path, ec);
      }
    }
    throw;
  }

  // commit in memory
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    auto& p = parsed[k];
    auto& rows = rows_[static_cast<std::size_t>(p.type)];
    if (p.type == RecordType::Message) messages_.insert(p.messageId);
    if (p.type == RecordType::Feedback) latestFeedback_[p.key] = rows.size();
    if (committed) committed->push_back({p.type, p.json});
    rows.push_back({seqs[k], p.t, std::move(p.json), std::move(p.key)});
  }
  batches_[batchId] = ack;
  return ack;
}

std::vector<const TenantStore::Row*> TenantStore::view(RecordType type) const {
  std::vector<const Row*> out;
  const auto& rows = rows_[static_cast<std::size_t>(type)];
  if (type != RecordType::Feedback) {
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(&r);
    return out;
  }
  for (const auto& [key, idx] : latestFeedback_) out.push_back(&rows[idx]);
  std::sort(out.begin(), out.end(), [](const Row* a, const Row* b) {
    return std::tie(a->t, a->seq) < std::tie(b->t, b->seq);
  });
  return out;
}

Page TenantStore::query(RecordType type, std::int64_t since, std::size_t limit,
                        const std::optional<std::string>& cursor) const {
  limit = std::clamp<std::size_t>(limit, 1, kMaxPageSize);
  std::int64_t ct = std::numeric_limits<std::int64_t>::min();
  std::uint64_t cs = 0;
  if (cursor && !cursor->empty()) {
    const auto colon = cursor->find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("cursor");
      ct = std::stoll(cursor->substr(0, colon));
      cs = std::stoull(cursor->substr(colon + 1));
    } catch (const std::exception&) {
      throw BadRequest("bad cursor '" + *cursor + "'");
    }
  }
  std::shared_lock lk(mu_);
  const auto rows = view(type);
  Page page;
  auto it = std::lower_bound(rows.begin(), rows.end(), since,
                             [](const Row* r, std::int64_t v) { return r->t <= v; });
  for (; it != rows.end(); ++it) {
    const Row* r = *it;
    if (std::tie(r->t, r->seq) <= std::tie(ct, cs)) continue;
    if (page.records.size() == limit) {
      const auto& last = page.records.back();
      page.nextCursor = std::to_string(last.t) + ":" + std::to_string(last.seq);
      break;
    }
    page.records.push_back({r->seq, r->t, r->json});
  }
  return page;
}

FeedbackRecord TenantStore::add_feedback(const FeedbackRecord& f) {
  std::unique_lock lk(mu_);
  if (!messages_.contains(f.messageId)) throw UnknownMessage(f.messageId);
  if (!in_palette(f.emoji)) throw UnknownEmoji(f.emoji);
  const auto seq = nextSeq_;
  const auto text = serialize_feedback(f);
  const auto file = file_for(RecordType::Feedback);
  const auto path = dir_ / file;
  const bool existed = fs::exists(path);
  const auto size = existed ? fs::file_size(path) : 0;
  try {
    append_lines(file, row_line(seq, f.timestamp, text));
    nextSeq_ = seq + 1;
    write_state();
  } catch (...) {
    nextSeq_ = seq;
    std::error_code ec;
    if (existed) {
      fs::resize_file(path, size, ec);
    } else {
      fs::remove(path, ec);
    }
    throw;
  }
  auto& rows = rows_[static_cast<std::size_t>(RecordType::Feedback)];
  const auto key = feedback_key(f.messageId, f.userId);
  latestFeedback_[key] = rows.size();
  rows.push_back({seq, f.timestamp, text, key});
  return f;
}

std::vector<FeedbackRecord> TenantStore::feedback_for(const std::string& messageId) const {
  std::shared_lock lk(mu_);
  std::vector<FeedbackRecord> out;
  const auto& rows = rows_[static_cast<std::size_t>(RecordType::Feedback)];
  for (auto it = latestFeedback_.lower_bound(messageId + '\n');
       it != latestFeedback_.end() && it->first.starts_with(messageId + '\n'); ++it) {
    out.push_back(parse_feedback(rows[it->second].json));
  }
  return out;
}

bool TenantStore::has_message(const std::string& messageId) const {
  std::shared_lock lk(mu_);
  return messages_.contains(messageId);
}

std::int64_t TenantStore::watermark() const {
  std::shared_lock lk(mu_);
  return watermark_;
}

std::string TenantStore::last_batch_id() const {
  std::shared_lock lk(mu_);
  return lastBatchId_;
}

std::size_t TenantStore::count(RecordType t) const {
  std::shared_lock lk(mu_);
  return t == RecordType::Feedback ? latestFeedback_.size() : rows_[static_cast<std::size_t>(t)].size();
}

// ---- EventHub -------------------------------------------------------------

void EventHub::evict() {
  const auto cutoff = clock_() - retentionMs_;
  while (!events_.empty() && events_.front().at < cutoff) events_.pop_front();
}

std::uint64_t EventHub::publish(std::string type, std::string data) {
  std::uint64_t id;
  {
    std::lock_guard lk(mu_);
    id = nextId_++;
    events_.push_back({id, std::move(type), std::move(data), clock_()});
    evict();
  }
  cv_.notify_all();
  return id;
}

std::vector<StreamEvent> EventHub::after(std::uint64_t after, bool* gap) {
  std::lock_guard lk(mu_);
  evict();
  const std::uint64_t oldest = events_.empty() ? nextId_ : events_.front().id;
  if (gap) *gap = after + 1 < oldest && after + 1 < nextId_;
  std::vector<StreamEvent> out;
  for (const auto& e : events_) {
    if (e.id > after) out.push_back(e);
  }
  return out;
}

bool EventHub::wait(std::uint64_t after, std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  return cv_.wait_for(lk, timeout, [&] { return closed_ || nextId_ - 1 > after; });
}

std::uint64_t EventHub::last_id() const {
  std::lock_guard lk(mu_);
  return nextId_ - 1;
}

void EventHub::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventHub::closed() const {
  std::lock_guard lk(mu_);
  return closed_;
}

// ---- ControlChannel -------------------------------------------------------

std::uint64_t ControlChannel::post(const std::string& command, double value, std::int64_t now) {
  static const std::set<std::string> known = {"pause", "resume", "speed", "seek", "stop"};
  if (!known.contains(command)) throw BadRequest("unknown replay command '" + command + "'");
  if (command == "speed" && value < 0) throw BadRequest("speed must be >= 0 (0 = max)");
  std::lock_guard lk(mu_);
  if (!lastPoll_ || now - *lastPoll_ > kActiveWindowMs) throw NoActiveReplay();
  const auto seq = static_cast<std::uint64_t>(commands_.size()) + 1;
  commands_.push_back({seq, command, value});
  return seq;
}

std::vector<ControlCommand> ControlChannel::poll(std::uint64_t after, std::int64_t now) {
  std::lock_guard lk(mu_);
  lastPoll_ = now;
  std::vector<ControlCommand> out;
  for (const auto& c : commands_) {
    if (c.seq > after) out.push_back(c);
  }
  return out;
}

bool ControlChannel::active(std::int64_t now) const {
  std::lock_guard lk(mu_);
  return lastPoll_ && now - *lastPoll_ <= kActiveWindowMs;
}

// ---- config ---------------------------------------------------------------

ServiceConfig load_service_config(const std::map<std::string, std::string>& env,
                                  const std::optional<std::string>& configFile) {
  json file = json::object();
  if (configFile) {
    std::ifstream in(*configFile);
    if (!in) throw BadConfig("cannot read config file " + *configFile);
    try {
      in >> file;
    } catch (const json::exception& e) {
      throw BadConfig("config file: " + std::string(e.what()));
    }
  }
  auto pick = [&](const char* envKey, const char* fileKey) -> std::optional<std::string> {
    if (auto it = env.find(envKey); it != env.end() && !it->second.empty()) return it->second;
    if (file.contains(fileKey) && file[fileKey].is_string()) return file[fileKey].get<std::string>();
    return std::nullopt;
  };
  ServiceConfig cfg;
  if (auto v = pick("DATA_ROOT", "dataRoot")) cfg.dataRoot = *v;
  if (auto v = pick("BIND_ADDR", "bindAddr")) cfg.bindAddr = *v;
  const auto keyFile = pick("JWT_KEY_FILE", "jwtKeyFile");
  if (!keyFile) throw BadConfig("JWT_KEY_FILE is not set");
  std::ifstream key(*keyFile, std::ios::binary);
  if (!key) throw BadConfig("cannot read JWT key file " + *keyFile);
  std::ostringstream ss;
  ss << key.rdbuf();
  cfg.jwtKey = ss.str();
  while (!cfg.jwtKey.empty() && (cfg.jwtKey.back() == '\n' || cfg.jwtKey.back() == '\r')) cfg.jwtKey.pop_back();
  if (cfg.jwtKey.size() < 16) throw BadConfig("JWT key in " + *keyFile + " is shorter than 16 bytes");
  if (cfg.bindAddr.find(':') == std::string::npos) throw BadConfig("BIND_ADDR must be host:port");
  return cfg;
}

// ---- SyncService ----------------------------------------------------------

SyncService::SyncService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  clock_ = cfg_.clock ? cfg_.clock : [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
  if (cfg_.jwtKey.empty()) throw BadConfig("empty JWT key");
  fs::create_directories(cfg_.dataRoot / "auth");
  fs::create_directories(cfg_.dataRoot / "tenants");
  const auto credPath = cfg_.dataRoot / "auth" / "credentials.json";
  if (fs::exists(credPath)) {
    const auto j = json::parse(read_all(credPath));
    for (const auto& u : j["users"]) {
      auto t = std::make_unique<Tenant>();
      t->userId = u["userId"].get<std::string>();
      t->credentialHash = u["credentialHash"].get<std::string>();
      t->createdAt = u["createdAt"].get<std::int64_t>();
      t->store = std::make_unique<TenantStore>(cfg_.dataRoot / "tenants" / t->userId, t->userId);
      t->hub = std::make_unique<EventHub>(cfg_.retentionMs, clock_);
      t->control = std::make_unique<ControlChannel>();
      tenants_[t->userId] = std::move(t);
    }
  }
}

void SyncService::save_credentials() const {
  nlohmann::ordered_json j;
  j["users"] = nlohmann::ordered_json::array();
  for (const auto& [id, t] : tenants_) {
    j["users"].push_back({{"userId", id}, {"credentialHash", t->credentialHash}, {"createdAt", t->createdAt}});
  }
  write_atomic(cfg_.dataRoot / "auth" / "credentials.json", j.dump(1) + "\n");
}

void SyncService::register_user(const std::string& userId, const std::string& secret) {
  if (!valid_user_id(userId)) throw SchemaViolation(0, "userId", "1-64 characters of [A-Za-z0-9_.-]");
  if (secret.size() < 4) throw SchemaViolation(0, "secret", "at least 4 characters");
  auto hash = crypto::hash_secret(secret, cfg_.pbkdf2Iterations);
  std::lock_guard lk(mu_);
  if (tenants_.contains(userId)) throw DuplicateUser(userId);
  auto t = std::make_unique<Tenant>();
  t->userId = userId;
  t->credentialHash = std::move(hash);
  t->createdAt = clock_();
  t->store = std::make_unique<TenantStore>(cfg_.dataRoot / "tenants" / userId, userId);
  t->hub = std::make_unique<EventHub>(cfg_.retentionMs, clock_);
  t->control = std::make_unique<ControlChannel>();
  tenants_[userId] = std::move(t);
  save_credentials();
}

std::string SyncService::login(const std::string& userId, const std::string& secret) {
  std::string hash;
  {
    std::lock_guard lk(mu_);
    auto it = tenants_.find(userId);
    if (it == tenants_.end()) throw InvalidCredentials();
    hash = it->second->credentialHash;
  }
  if (!crypto::verify_secret(secret, hash)) throw InvalidCredentials();
  return crypto::issue_token(userId, cfg_.jwtKey, clock_(), cfg_.tokenTtlMs);
}

std::string SyncService::authenticate(std::string_view token) const {
  auto sub = crypto::verify_token(token, cfg_.jwtKey, clock_());
  std::lock_guard lk(mu_);
  if (!tenants_.contains(sub)) throw AuthFailure("token subject is not a registered user");
  return sub;
}

void SyncService::check_tenant(const std::string& subject, const std::string& requested) {
  if (!requested.empty() && requested != subject) {
    throw Forbidden("'" + subject + "' may not access '" + requested + "'");
  }
}

SyncService::Tenant& SyncService::tenant(const std::string& userId) const {
  std::lock_guard lk(mu_);
  auto it = tenants_.find(userId);
  if (it == tenants_.end()) throw AuthFailure("unknown tenant '" + userId + "'");
  return *it->second;
}

TenantStore& SyncService::store(const std::string& subject) const { return *tenant(subject).store; }
EventHub& SyncService::hub(const std::string& subject) { return *tenant(subject).hub; }
ControlChannel& SyncService::control(const std::string& subject) { return *tenant(subject).control; }

void SyncService::publish(Tenant& t, const std::vector<Committed>& records) {
  for (const auto& r : records) {
    if (r.type == RecordType::Sensor) continue;
    t.hub->publish(std::string(to_string(r.type)), r.json);
  }
}

UploadAck SyncService::upload(const std::string& subject, const json& batch) {
  if (batch.is_object() && batch.contains("userId") && batch["userId"].is_string()) {
    check_tenant(subject, batch["userId"].get<std::string>());
  }
  auto& t = tenant(subject);
  std::vector<Committed> committed;
  // publish under the store's writer order so stream order matches commit order
  static std::mutex publishMu;
  std::lock_guard lk(publishMu);
  auto ack = t.store->upload(batch, &committed);
  publish(t, committed);
  return ack;
}

Page SyncService::query(const std::string& subject, RecordType type, std::int64_t since, std::size_t limit,
                        const std::optional<std::string>& cursor) const {
  return store(subject).query(type, since, limit, cursor);
}

FeedbackRecord SyncService::feedback(const std::string& subject, const std::string& messageId,
                                     const std::string& emoji, std::optional<std::int64_t> t) {
  auto& ten = tenant(subject);
  const auto rec = ten.store->add_feedback({messageId, emoji, subject, t.value_or(clock_())});
  ten.hub->publish("feedback", serialize_feedback(rec));
  return rec;
}

std::vector<FeedbackRecord> SyncService::feedback_for(const std::string& subject,
                                                      const std::string& messageId) const {
  return store(subject).feedback_for(messageId);
}

void SyncService::shutdown() {
  stopping_ = true;
  std::lock_guard lk(mu_);
  for (auto& [id, t] : tenants_) t->hub->close();
}

}  // namespace contexta::service
