#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "contexta/dialogue.hpp"
#include "json.hpp"

namespace contexta::service {

enum class RecordType : std::uint8_t { Sensor, Trigger, Message, Feedback };
inline constexpr std::size_t kRecordTypeCount = 4;
std::string_view to_string(RecordType t);
std::optional<RecordType> record_type_from_string(std::string_view s);

struct StoredRecord {
  std::uint64_t seq = 0;
  std::int64_t t = 0;
  std::string json;  // canonical record
};

struct UploadAck {
  std::string batchId;
  std::int64_t serverWatermark = 0;
  std::size_t accepted = 0;
  bool replayed = false;
  std::string to_json() const;  // without `replayed`
};

struct Page {
  std::vector<StoredRecord> records;
  std::optional<std::string> nextCursor;
  std::string to_json() const;
};

/// Record accepted into a store, in commit order.
struct Committed {
  RecordType type;
  std::string json;
};

inline constexpr std::size_t kMaxPageSize = 1000;
inline constexpr std::size_t kDefaultPageSize = 100;

/// One tenant's isolated namespace: `dir/` holds one JSON-lines file per
/// record type, the batch ledger and the watermark state. Single writer,
/// snapshot readers.
class TenantStore {
 public:
  TenantStore(std::filesystem::path dir, std::string userId);

  /// Batch: {"batchId","clientWatermark","records":[{"type","record"}]}.
  /// Throws MalformedBatch, StaleBatch, Forbidden. All-or-nothing.
  UploadAck upload(const nlohmann::json& batch, std::vector<Committed>* committed = nullptr);

  /// Records with t > since (and after `cursor`), in (t, seq) order.
  Page query(RecordType type, std::int64_t since, std::size_t limit,
             const std::optional<std::string>& cursor = std::nullopt) const;

  /// Latest-wins per (messageId, userId). Throws UnknownMessage, UnknownEmoji.
  FeedbackRecord add_feedback(const FeedbackRecord& f);
  std::vector<FeedbackRecord> feedback_for(const std::string& messageId) const;

  bool has_message(const std::string& messageId) const;
  std::int64_t watermark() const;
  std::string last_batch_id() const;
  std::size_t count(RecordType t) const;
  const std::filesystem::path& dir() const { return dir_; }

  /// Called before each file write of an upload; throwing aborts the batch.
  void set_fault_hook(std::function<void(const std::string& file)> hook);

 private:
  struct Row {
    std::uint64_t seq;
    std::int64_t t;
    std::string json;
    std::string key;  // feedback: messageId + '\n' + userId
  };
  void load();
  void append_lines(const std::string& file, const std::string& text);
  void write_state();
  std::vector<const Row*> view(RecordType type) const;

  std::filesystem::path dir_;
  std::string userId_;
  mutable std::shared_mutex mu_;
  std::array<std::vector<Row>, kRecordTypeCount> rows_;
  std::set<std::string> messages_;
  std::map<std::string, std::size_t> latestFeedback_;  // key -> index in rows_[Feedback]
  std::map<std::string, UploadAck> batches_;
  std::int64_t watermark_ = 0;
  std::string lastBatchId_;
  std::uint64_t nextSeq_ = 1;
  std::function<void(const std::string&)> faultHook_;
};

struct StreamEvent {
  std::uint64_t id = 0;
  std::string type;
  std::string data;
  std::int64_t at = 0;  // service clock
};

/// Per-tenant live feed with a time-bounded retention buffer.
class EventHub {
 public:
  EventHub(std::int64_t retentionMs, std::function<std::int64_t()> clock)
      : retentionMs_(retentionMs), clock_(std::move(clock)) {}

  std::uint64_t publish(std::string type, std::string data);
  /// Retained events with id > after. `gap` is set when some were evicted.
  std::vector<StreamEvent> after(std::uint64_t after, bool* gap = nullptr);
  /// Waits until an event with id > after exists or `timeout` passes.
  bool wait(std::uint64_t after, std::chrono::milliseconds timeout);
  std::uint64_t last_id() const;
  void close();
  bool closed() const;

 private:
  void evict();

  const std::int64_t retentionMs_;
  std::function<std::int64_t()> clock_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<StreamEvent> events_;
  std::uint64_t nextId_ = 1;
  bool closed_ = false;
};

struct ControlCommand {
  std::uint64_t seq = 0;
  std::string command;  // pause | resume | speed | seek | stop
  double value = 0.0;
};

/// Commands from the console waiting for a replay to poll them.
class ControlChannel {
 public:
  static constexpr std::int64_t kActiveWindowMs = 10'000;

  /// Throws NoActiveReplay when nobody polled recently, MalformedBatch on a
  /// bad command.
  std::uint64_t post(const std::string& command, double value, std::int64_t now);
  std::vector<ControlCommand> poll(std::uint64_t after, std::int64_t now);
  bool active(std::int64_t now) const;

 private:
  mutable std::mutex mu_;
  std::vector<ControlCommand> commands_;
  std::optional<std::int64_t> lastPoll_;
};

struct ServiceConfig {
  std::filesystem::path dataRoot = "data-root";
  std::string jwtKey;
  std::int64_t tokenTtlMs = 24LL * 3600 * 1000;
  std::int64_t retentionMs = 10LL * 60 * 1000;
  int pbkdf2Iterations = 100'000;
  std::string bindAddr = "127.0.0.1:8080";
  std::function<std::int64_t()> clock;  // epoch ms; system clock when empty
};

/// Reads DATA_ROOT, JWT_KEY_FILE and BIND_ADDR from `env` (keys absent from
/// `env` fall back to the optional JSON config file's dataRoot / jwtKeyFile /
/// bindAddr). Throws BadConfig.
ServiceConfig load_service_config(const std::map<std::string, std::string>& env,
                                  const std::optional<std::string>& configFile = std::nullopt);

/// Transport-independent service: auth, per-tenant stores, live feeds and
/// replay control. Thread-safe.
class SyncService {
 public:
  explicit SyncService(ServiceConfig cfg);

  void register_user(const std::string& userId, const std::string& secret);
  std::string login(const std::string& userId, const std::string& secret);
  /// Subject of a bearer token. Throws AuthFailure / ExpiredToken.
  std::string authenticate(std::string_view token) const;

  /// `requested` names the tenant the caller addresses; empty means its own.
  /// Throws Forbidden when it is not the caller.
  static void check_tenant(const std::string& subject, const std::string& requested);

  UploadAck upload(const std::string& subject, const nlohmann::json& batch);
  Page query(const std::string& subject, RecordType type, std::int64_t since, std::size_t limit,
             const std::optional<std::string>& cursor) const;
  FeedbackRecord feedback(const std::string& subject, const std::string& messageId,
                          const std::string& emoji, std::optional<std::int64_t> t);
  std::vector<FeedbackRecord> feedback_for(const std::string& subject, const std::string& messageId) const;

  EventHub& hub(const std::string& subject);
  ControlChannel& control(const std::string& subject);
  TenantStore& store(const std::string& subject) const;

  std::int64_t now() const { return clock_(); }
  const ServiceConfig& config() const { return cfg_; }
  void shutdown();
  bool stopping() const { return stopping_; }

 private:
  struct Tenant {
    std::string userId;
    std::string credentialHash;
    std::int64_t createdAt = 0;
    std::unique_ptr<TenantStore> store;
    std::unique_ptr<EventHub> hub;
    std::unique_ptr<ControlChannel> control;
  };
  Tenant& tenant(const std::string& userId) const;
  void save_credentials() const;
  void publish(Tenant& t, const std::vector<Committed>& records);

  ServiceConfig cfg_;
  std::function<std::int64_t()> clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Tenant>> tenants_;
  std::atomic<bool> stopping_{false};
};

/// Valid tenant id: 1-64 of [A-Za-z0-9_.-], not starting with '.'.
bool valid_user_id(std::string_view id);

}  // namespace contexta::service
