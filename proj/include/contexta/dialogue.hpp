#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "contexta/prompt.hpp"
#include "contexta/segment.hpp"
#include "contexta/trigger.hpp"

namespace contexta {

// ---- responder ----------------------------------------------------------

struct ResponderCapability {
  std::string name;
  bool supportsStreaming = false;
};

class ResponderClient {
 public:
  virtual ~ResponderClient() = default;
  virtual ResponderCapability capability() const = 0;
  /// May block; may throw ResponderUnavailable.
  virtual std::string respond(const std::string& prompt) = 0;
};

/// Template replies keyed by the scenario named in the prompt, filled with
/// the prompt's metric lines. A pure function of the prompt text.
class StubResponder : public ResponderClient {
 public:
  ResponderCapability capability() const override { return {"stub", false}; }
  std::string respond(const std::string& prompt) override;
};

inline constexpr std::chrono::milliseconds kResponderTimeout{15000};

/// Calls `client` on a helper thread and gives up after `timeout`
/// (ResponderTimeout). Throws std::invalid_argument on an empty prompt.
std::string respond(const std::string& prompt, ResponderClient& client,
                    std::chrono::milliseconds timeout = kResponderTimeout);

/// Metric lines ("- key: value") of a rendered prompt's context block.
std::map<std::string, std::string> prompt_metrics(std::string_view rendered);

// ---- sentiment and stickers ---------------------------------------------

enum class Sentiment : std::uint8_t { Positive, Neutral, Negative };
std::string_view to_string(Sentiment s);

struct SentimentResult {
  double score = 0.0;  // (pos - neg) / (pos + neg + 1)
  std::optional<std::string> keyword;
  Sentiment label() const {
    return score > 0 ? Sentiment::Positive : score < 0 ? Sentiment::Negative : Sentiment::Neutral;
  }
};

/// Weighted terms. ASCII terms match whole words case-insensitively; other
/// terms match as substrings, longest first, without overlap.
class Lexicon {
 public:
  /// Lines "term<TAB>weight"; '#' starts a comment. Throws BadConfig.
  static Lexicon parse(std::string_view tsv);
  static Lexicon load_file(const std::string& path);
  static const Lexicon& bundled();

  void add(std::string term, int weight);
  std::size_t size() const { return words_.size() + phrases_.size(); }
  std::optional<int> weight(const std::string& term) const;

  /// Every matched term occurrence contributes its weight; the keyword is
  /// the matched term with the largest |weight|, earliest on ties.
  SentimentResult analyze(std::string_view text) const;

 private:
  std::map<std::string, int> words_;    // lower-case ASCII
  std::map<std::string, int> phrases_;  // everything else
  std::size_t longestPhrase_ = 0;
};

SentimentResult sentiment_keyword(std::string_view text, const Lexicon& lex = Lexicon::bundled());

class StickerClient {
 public:
  virtual ~StickerClient() = default;
  /// Sticker reference for `keyword`; nullopt when none or on failure.
  virtual std::optional<std::string> lookup(const std::string& keyword) = 0;
};

/// Offline fixtures: `dir/<keyword>.sticker` holds the reference.
class FixtureStickerClient : public StickerClient {
 public:
  explicit FixtureStickerClient(std::string dir) : dir_(std::move(dir)) {}
  std::optional<std::string> lookup(const std::string& keyword) override;

 private:
  std::string dir_;
};

/// GET <base>/stickers?keyword=... returning {"sticker":"..."}. Any failure
/// yields nullopt.
class HttpStickerClient : public StickerClient {
 public:
  explicit HttpStickerClient(std::string baseUrl) : base_(std::move(baseUrl)) {}
  std::optional<std::string> lookup(const std::string& keyword) override;

 private:
  std::string base_;
};

// ---- feedback -------------------------------------------------------------

inline constexpr std::array<std::string_view, 6> kEmojiPalette = {
    "\xF0\x9F\x91\x8D",          // thumbs up
    "\xE2\x9D\xA4\xEF\xB8\x8F",  // red heart
    "\xF0\x9F\x98\x82",          // tears of joy
    "\xF0\x9F\x98\xAE",          // open mouth
    "\xF0\x9F\x98\xA2",          // crying
    "\xF0\x9F\x91\x8E",          // thumbs down
};
bool in_palette(std::string_view emoji);

struct FeedbackRecord {
  std::string messageId;
  std::string emoji;
  std::string userId;
  std::int64_t timestamp = 0;
  bool operator==(const FeedbackRecord&) const = default;
};

std::string serialize_feedback(const FeedbackRecord& f);
FeedbackRecord parse_feedback(std::string_view json);

/// Append-only feedback log with latest-wins per (messageId, userId).
/// Thread-safe. With a path, every record is appended to the file and the
/// file is replayed on construction.
class FeedbackStore {
 public:
  FeedbackStore() = default;
  explicit FeedbackStore(std::string path);

  void register_message(const std::string& messageId);
  bool has_message(const std::string& messageId) const;

  /// Throws UnknownMessage, UnknownEmoji.
  FeedbackRecord record(const std::string& messageId, const std::string& emoji,
                        const std::string& userId, std::int64_t timestamp);
  std::vector<FeedbackRecord> for_message(const std::string& messageId) const;
  std::vector<FeedbackRecord> all() const;
  std::size_t log_size() const;

 private:
  mutable std::mutex mu_;
  std::string path_;
  std::set<std::string> messages_;
  std::map<std::pair<std::string, std::string>, FeedbackRecord> latest_;
  std::size_t appended_ = 0;
};

// ---- speech ---------------------------------------------------------------

class SpeechBackend {
 public:
  virtual ~SpeechBackend() = default;
  /// Throws BackendUnavailable.
  virtual void synthesize(const std::string& jobId, std::size_t index, const std::string& text) = 0;
};

/// Logs requested segments in order; can be switched off to inject faults.
class RecorderBackend : public SpeechBackend {
 public:
  struct Entry {
    std::string jobId;
    std::size_t index;
    std::string text;
  };
  void synthesize(const std::string& jobId, std::size_t index, const std::string& text) override;
  void set_available(bool up);
  std::vector<Entry> log() const;

 private:
  mutable std::mutex mu_;
  bool up_ = true;
  std::vector<Entry> log_;
};

struct SpeechJob {
  enum class State : std::uint8_t { Queued, Done, Failed };
  std::string id;
  std::vector<std::string> segments;
  State state = State::Queued;
  std::size_t completed = 0;
  std::string error;
};

/// Runs synthesis jobs on its own thread, one at a time, each segment at
/// most once and in order. A failing segment fails the job; later segments
/// of that job are not attempted.
class SpeechWorker {
 public:
  explicit SpeechWorker(SpeechBackend& backend);
  ~SpeechWorker();
  SpeechWorker(const SpeechWorker&) = delete;
  SpeechWorker& operator=(const SpeechWorker&) = delete;

  /// Throws std::invalid_argument on empty segments.
  std::string submit(std::vector<std::string> segments);
  /// Waits for the job to leave the queue.
  SpeechJob wait(const std::string& jobId, std::chrono::milliseconds timeout = std::chrono::seconds(5));
  void drain();

 private:
  void run();

  SpeechBackend& backend_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  std::map<std::string, SpeechJob> jobs_;
  std::size_t nextId_ = 0;
  bool stop_ = false;
  bool busy_ = false;
  std::thread thread_;
};

// ---- pipeline -------------------------------------------------------------

struct DialogueMessage {
  std::string messageId;
  std::optional<ScenarioId> scenarioId;
  std::vector<std::string> segments;
  std::vector<bool> joins;
  std::optional<std::string> stickerKeyword;
  std::optional<std::string> sticker;  // resolved reference
  SentimentResult sentiment;
  std::int64_t timestamp = 0;
};

std::string serialize_message(const DialogueMessage& m);
DialogueMessage parse_message(std::string_view json);
/// Response text rebuilt from the segments.
std::string message_text(const DialogueMessage& m);

/// What one trigger produced, in pipeline order.
struct DialogueTurn {
  ScenarioTrigger trigger;
  std::string prompt;
  std::string response;
  DialogueMessage message;
  std::optional<std::string> speechJob;
};

struct DialogueConfig {
  std::size_t maxSegmentLength = kDefaultMaxSegment;
  std::chrono::milliseconds timeout = kResponderTimeout;
  BuildOptions build;
};

/// trigger -> prompt -> response -> segments + sentiment + sticker -> speech.
/// The history records each assistant message. Not thread-safe; run it on
/// the trigger-handling worker.
class DialoguePipeline {
 public:
  DialoguePipeline(const TemplateSet& templates, ResponderClient& responder, DialogueConfig cfg = {});

  void set_lexicon(const Lexicon* lex) { lexicon_ = lex; }
  void set_stickers(StickerClient* s) { stickers_ = s; }
  void set_speech(SpeechWorker* w) { speech_ = w; }
  void set_feedback(FeedbackStore* f) { feedback_ = f; }

  /// Throws MissingTemplate, TemplateError, ResponderTimeout, ResponderUnavailable.
  DialogueTurn handle(const ScenarioTrigger& trigger);
  /// Records a user reply in the history.
  void user_reply(std::string messageId, std::string text, std::int64_t timestamp);

  InteractionHistory& history() { return history_; }

 private:
  const TemplateSet& templates_;
  ResponderClient& responder_;
  DialogueConfig cfg_;
  const Lexicon* lexicon_ = nullptr;
  StickerClient* stickers_ = nullptr;
  SpeechWorker* speech_ = nullptr;
  FeedbackStore* feedback_ = nullptr;
  InteractionHistory history_;
};

/// Deterministic message id for a trigger.
std::string message_id_for(const ScenarioTrigger& t);

}  // namespace contexta
