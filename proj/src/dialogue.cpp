#include "contexta/dialogue.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "contexta/error.hpp"
#include "httplib.h"
#include "json.hpp"

#ifndef CONTEXTA_DATA_DIR
#define CONTEXTA_DATA_DIR "data"
#endif

namespace contexta {

using ojson = nlohmann::ordered_json;

// ---- responder ----------------------------------------------------------

std::map<std::string, std::string> prompt_metrics(std::string_view rendered) {
  std::map<std::string, std::string> out;
  const auto start = rendered.find("\nMetrics:\n");
  if (start == std::string_view::npos) return out;
  std::size_t i = start + 10;
  while (i < rendered.size() && rendered.substr(i, 2) == "- ") {
    auto eol = rendered.find('\n', i);
    if (eol == std::string_view::npos) eol = rendered.size();
    const auto line = rendered.substr(i + 2, eol - i - 2);
    const auto colon = line.find(": ");
    if (colon != std::string_view::npos) out[std::string(line.substr(0, colon))] = line.substr(colon + 2);
    i = eol + 1;
  }
  return out;
}

namespace {

// Replaces {NAME} with the prompt's metric value ("?" when absent).
std::string fill(std::string_view text, const std::map<std::string, std::string>& m) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find('{', i);
    if (open == std::string_view::npos) {
      out.append(text.substr(i));
      break;
    }
    const auto close = text.find('}', open);
    out.append(text.substr(i, open - i));
    auto it = m.find(std::string(text.substr(open + 1, close - open - 1)));
    out += it == m.end() ? "?" : it->second;
    i = close + 1;
  }
  return out;
}

std::string_view stub_reply(ScenarioId id) {
  switch (id) {
    case ScenarioId::Walking:
      return "Nice walk! That's {walkingMinutes} minutes on your feet already. Enjoy the fresh air and keep whatever pace feels good.";
    case ScenarioId::Running:
      return "Great run so far, {runningMinutes} minutes in! Remember to sip some water and listen to your body.";
    case ScenarioId::IntenseExercise:
      return "That was a strong session, well done! Take a few minutes to stretch, drink some water and let your heart rate settle.";
    case ScenarioId::ProlongedSitting:
      return "You've been still for about {stillMinutes} minutes. How about standing up for a quick stretch? Even a short walk around the room helps.";
    case ScenarioId::Nap:
      return "Welcome back from your nap! A glass of water and a little daylight can make the afternoon feel fresh.";
    case ScenarioId::WakeUp:
      return "Good morning! You slept about {sleepMinutes} minutes. Take it slow, maybe open the curtains and have some water.";
    case ScenarioId::Insomnia:
      return "Having trouble sleeping tonight? That's okay. Try a few slow breaths, dim the screen, and let your shoulders relax.";
    case ScenarioId::MealPattern:
      return "Enjoy your meal! Maybe put the phone aside for a bit and savor it.";
    case ScenarioId::NighttimeSummary:
      return "Here's your day: {screenOnMinutes} minutes of screen time and {activityMinutes.walking} minutes of walking. You did well today. Time to wind down and get some rest.";
    case ScenarioId::WorkplaceArrival:
      return "Good morning at work! Start with something easy and the rest of the day will follow.";
    case ScenarioId::OffWork:
      return "Work is done for today, nice job! Time to switch off and do something you enjoy.";
    case ScenarioId::TravelRecommendation:
      return "Looks like you're somewhere new, about {distanceFromHomeKm} km from home! Want me to suggest something nearby to explore?";
    case ScenarioId::ExcessiveAppUsage:
      return "It seems like you've been scrolling for quite a while\xE2\x80\x94maybe your mind is trying to unwind? "
             "Just checking in\xE2\x80\x94how are you feeling right now? If you're tired but restless, I can suggest "
             "something relaxing. You've spent {cumulativeUsageMinutes} minutes in social apps since midnight.";
    case ScenarioId::MusicPlayback:
      return "Enjoying your music? That's {playbackMinutes} minutes of listening so far. Want a fresh playlist, or a short break for your ears?";
    case ScenarioId::StoryReminder:
      return "It's story time! Tonight's story is ready whenever you are.";
    case ScenarioId::LateNightBinge:
      return "Still watching? It's been {videoMinutes} minutes of video tonight. How are you feeling? Maybe one last episode, then some rest?";
  }
  return "I'm here if you want to talk.";
}

}  // namespace

std::string StubResponder::respond(const std::string& prompt) {
  const auto id = prompt_scenario(prompt);
  if (!id) return "I'm here if you want to talk.";
  return fill(stub_reply(*id), prompt_metrics(prompt));
}

std::string respond(const std::string& prompt, ResponderClient& client,
                    std::chrono::milliseconds timeout) {
  if (prompt.empty()) throw std::invalid_argument("respond: empty prompt");
  // The helper is detached so a hung client cannot hold up the caller; the
  // client must outlive the call.
  auto done = std::make_shared<std::promise<std::string>>();
  auto fut = done->get_future();
  std::thread([done, prompt, &client] {
    try {
      done->set_value(client.respond(prompt));
    } catch (...) {
      done->set_exception(std::current_exception());
    }
  }).detach();
  if (fut.wait_for(timeout) != std::future_status::ready) {
    throw ResponderTimeout(client.capability().name + " did not answer within " +
                           std::to_string(timeout.count()) + " ms");
  }
  try {
    return fut.get();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ResponderUnavailable(client.capability().name + ": " + e.what());
  }
}

// ---- sentiment ------------------------------------------------------------

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::Positive: return "positive";
    case Sentiment::Neutral: return "neutral";
    case Sentiment::Negative: return "negative";
  }
  return "neutral";
}

namespace {

bool ascii_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '\'' || c == '-';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool all_ascii_word(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), ascii_word_char);
}

}  // namespace

void Lexicon::add(std::string term, int weight) {
  if (all_ascii_word(term)) {
    words_[lower(term)] = weight;
  } else {
    longestPhrase_ = std::max(longestPhrase_, term.size());
    phrases_[std::move(term)] = weight;
  }
}

std::optional<int> Lexicon::weight(const std::string& term) const {
  if (auto it = words_.find(lower(term)); it != words_.end()) return it->second;
  if (auto it = phrases_.find(term); it != phrases_.end()) return it->second;
  return std::nullopt;
}

Lexicon Lexicon::parse(std::string_view tsv) {
  Lexicon lex;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw BadConfig("lexicon line " + std::to_string(no) + ": expected term<TAB>weight");
    }
    int w = 0;
    try {
      std::size_t used = 0;
      w = std::stoi(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw BadConfig("lexicon line " + std::to_string(no) + ": bad weight");
    }
    if (w == 0) throw BadConfig("lexicon line " + std::to_string(no) + ": weight must be non-zero");
    lex.add(line.substr(0, tab), w);
  }
  return lex;
}

Lexicon Lexicon::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadConfig("cannot read lexicon " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lex = load_file(std::string(CONTEXTA_DATA_DIR) + "/lexicon.tsv");
  return lex;
}

SentimentResult Lexicon::analyze(std::string_view text) const {
  int pos = 0, neg = 0;
  std::optional<std::string> best;
  int bestAbs = 0;
  auto hit = [&](const std::string& term, int w) {
    (w > 0 ? pos : neg) += std::abs(w);
    if (std::abs(w) > bestAbs) {
      bestAbs = std::abs(w);
      best = term;
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (ascii_word_char(c) && c != '\'' && c != '-') {
      std::size_t j = i;
      while (j < text.size() && ascii_word_char(text[j])) ++j;
      const auto word = lower(text.substr(i, j - i));
      if (auto it = words_.find(word); it != words_.end()) hit(it->first, it->second);
      i = j;
      continue;
    }
    if (static_cast<unsigned char>(c) >= 0x80) {
      bool matched = false;
      for (std::size_t len = std::min(longestPhrase_, text.size() - i); len > 0; --len) {
        auto it = phrases_.find(std::string(text.substr(i, len)));
        if (it != phrases_.end()) {
          hit(it->first, it->second);
          i += len;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      ++i;
      while (i < text.size() && (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) ++i;
      continue;
    }
    ++i;
  }
  SentimentResult r;
  r.score = static_cast<double>(pos - neg) / static_cast<double>(pos + neg + 1);
  r.keyword = best;
  return r;
}

SentimentResult sentiment_keyword(std::string_view text, const Lexicon& lex) { return lex.analyze(text); }

std::optional<std::string> FixtureStickerClient::lookup(const std::string& keyword) {
  if (keyword.empty() || keyword.find('/') != std::string::npos || keyword.starts_with(".")) return std::nullopt;
  std::ifstream in(std::filesystem::path(dir_) / (keyword + ".sticker"), std::ios::binary);
  if (!in) return std::nullopt;
  std::string ref;
  std::getline(in, ref);
  if (ref.empty()) return std::nullopt;
  return ref;
}

std::optional<std::string> HttpStickerClient::lookup(const std::string& keyword) {
  try {
    httplib::Client cli(base_);
    cli.set_connection_timeout(2);
    cli.set_read_timeout(2);
    auto res = cli.Get("/stickers", httplib::Params{{"keyword", keyword}}, httplib::Headers{});
    if (!res || res->status != 200) return std::nullopt;
    const auto j = nlohmann::json::parse(res->body);
    if (!j.contains("sticker") || !j["sticker"].is_string()) return std::nullopt;
    return j["sticker"].get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// ---- feedback -------------------------------------------------------------

bool in_palette(std::string_view emoji) {
  return std::find(kEmojiPalette.begin(), kEmojiPalette.end(), emoji) != kEmojiPalette.end();
}

std::string serialize_feedback(const FeedbackRecord& f) {
  ojson j;
  j["messageId"] = f.messageId;
  j["emoji"] = f.emoji;
  j["userId"] = f.userId;
  j["t"] = f.timestamp;
  return j.dump();
}

FeedbackRecord parse_feedback(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(0, "", e.what());
  }
  FeedbackRecord f;
  for (const char* k : {"messageId", "emoji"}) {
    if (!j.contains(k) || !j[k].is_string()) throw SchemaViolation(0, k, "required string");
  }
  f.messageId = j["messageId"].get<std::string>();
  f.emoji = j["emoji"].get<std::string>();
  if (j.contains("userId") && j["userId"].is_string()) f.userId = j["userId"].get<std::string>();
  if (j.contains("t") && j["t"].is_number_integer()) f.timestamp = j["t"].get<std::int64_t>();
  return f;
}

FeedbackStore::FeedbackStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    if (j.contains("message")) {
      messages_.insert(j["message"].get<std::string>());
      continue;
    }
    auto f = parse_feedback(line);
    messages_.insert(f.messageId);
    latest_[{f.messageId, f.userId}] = f;
    ++appended_;
  }
}

void FeedbackStore::register_message(const std::string& messageId) {
  std::lock_guard lk(mu_);
  if (!messages_.insert(messageId).second) return;
  if (!path_.empty()) {
    std::ofstream(path_, std::ios::app) << ojson{{"message", messageId}}.dump() << "\n";
  }
}

bool FeedbackStore::has_message(const std::string& messageId) const {
  std::lock_guard lk(mu_);
  return messages_.contains(messageId);
}

FeedbackRecord FeedbackStore::record(const std::string& messageId, const std::string& emoji,
                                     const std::string& userId, std::int64_t timestamp) {
  std::lock_guard lk(mu_);
  if (!messages_.contains(messageId)) throw UnknownMessage(messageId);
  if (!in_palette(emoji)) throw UnknownEmoji(emoji);
  FeedbackRecord f{messageId, emoji, userId, timestamp};
  if (!path_.empty()) std::ofstream(path_, std::ios::app) << serialize_feedback(f) << "\n";
  latest_[{messageId, userId}] = f;
  ++appended_;
  return f;
}

std::vector<FeedbackRecord> FeedbackStore::for_message(const std::string& messageId) const {
  std::lock_guard lk(mu_);
  std::vector<FeedbackRecord> out;
  for (auto it = latest_.lower_bound({messageId, ""}); it != latest_.end() && it->first.first == messageId; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<FeedbackRecord> FeedbackStore::all() const {
  std::lock_guard lk(mu_);
  std::vector<FeedbackRecord> out;
  for (const auto& [k, v] : latest_) out.push_back(v);
  return out;
}

std::size_t FeedbackStore::log_size() const {
  std::lock_guard lk(mu_);
  return appended_;
}

// ---- speech ---------------------------------------------------------------

void RecorderBackend::synthesize(const std::string& jobId, std::size_t index, const std::string& text) {
  std::lock_guard lk(mu_);
  if (!up_) throw BackendUnavailable("speech backend is down");
  log_.push_back({jobId, index, text});
}

void RecorderBackend::set_available(bool up) {
  std::lock_guard lk(mu_);
  up_ = up;
}

std::vector<RecorderBackend::Entry> RecorderBackend::log() const {
  std::lock_guard lk(mu_);
  return log_;
}

SpeechWorker::SpeechWorker(SpeechBackend& backend) : backend_(backend), thread_([this] { run(); }) {}

SpeechWorker::~SpeechWorker() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

std::string SpeechWorker::submit(std::vector<std::string> segments) {
  if (segments.empty()) throw std::invalid_argument("synthesize_speech: no segments");
  std::string id;
  {
    std::lock_guard lk(mu_);
    id = "speech-" + std::to_string(++nextId_);
    SpeechJob job;
    job.id = id;
    job.segments = std::move(segments);
    jobs_[id] = std::move(job);
    queue_.push_back(id);
  }
  cv_.notify_all();
  return id;
}

SpeechJob SpeechWorker::wait(const std::string& jobId, std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, timeout, [&] {
    auto it = jobs_.find(jobId);
    return it == jobs_.end() || it->second.state != SpeechJob::State::Queued;
  });
  auto it = jobs_.find(jobId);
  if (it == jobs_.end()) throw std::invalid_argument("unknown speech job " + jobId);
  return it->second;
}

void SpeechWorker::drain() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return queue_.empty() && !busy_; });
}

void SpeechWorker::run() {
  std::unique_lock lk(mu_);
  while (true) {
    cv_.wait(lk, [&] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) return;
    const std::string id = queue_.front();
    queue_.pop_front();
    busy_ = true;
    const auto segments = jobs_[id].segments;
    lk.unlock();
    std::size_t done = 0;
    std::string error;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      try {
        backend_.synthesize(id, i, segments[i]);
        ++done;
      } catch (const std::exception& e) {
        error = e.what();
        break;
      }
    }
    lk.lock();
    auto& job = jobs_[id];
    job.completed = done;
    job.error = error;
    job.state = error.empty() ? SpeechJob::State::Done : SpeechJob::State::Failed;
    busy_ = false;
    cv_.notify_all();
  }
}

// ---- pipeline -------------------------------------------------------------

std::string serialize_message(const DialogueMessage& m) {
  ojson j;
  j["messageId"] = m.messageId;
  j["scenarioId"] = m.scenarioId ? ojson(std::string(to_string(*m.scenarioId))) : ojson(nullptr);
  j["segments"] = m.segments;
  j["joins"] = m.joins;
  j["sticker"] = m.stickerKeyword ? ojson(*m.stickerKeyword) : ojson(nullptr);
  j["stickerRef"] = m.sticker ? ojson(*m.sticker) : ojson(nullptr);
  j["sentiment"] = {{"label", std::string(to_string(m.sentiment.label()))}, {"score", m.sentiment.score}};
  j["t"] = m.timestamp;
  return j.dump();
}

DialogueMessage parse_message(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(0, "", e.what());
  }
  DialogueMessage m;
  try {
    m.messageId = j.at("messageId").get<std::string>();
    if (j.contains("scenarioId") && j["scenarioId"].is_string()) {
      m.scenarioId = scenario_from_string(j["scenarioId"].get<std::string>());
    }
    m.segments = j.at("segments").get<std::vector<std::string>>();
    if (j.contains("joins")) m.joins = j["joins"].get<std::vector<bool>>();
    if (j.contains("sticker") && j["sticker"].is_string()) m.stickerKeyword = j["sticker"].get<std::string>();
    if (j.contains("stickerRef") && j["stickerRef"].is_string()) m.sticker = j["stickerRef"].get<std::string>();
    if (j.contains("sentiment")) m.sentiment.score = j["sentiment"].value("score", 0.0);
    m.sentiment.keyword = m.stickerKeyword;
    m.timestamp = j.value("t", std::int64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(0, "message", e.what());
  }
  if (m.segments.empty()) throw SchemaViolation(0, "segments", "must not be empty");
  return m;
}

std::string message_text(const DialogueMessage& m) { return reconstruct({m.segments, m.joins}); }

std::string message_id_for(const ScenarioTrigger& t) {
  return std::string(to_string(t.scenarioId)) + "-" + std::to_string(t.firedAt);
}

DialoguePipeline::DialoguePipeline(const TemplateSet& templates, ResponderClient& responder,
                                   DialogueConfig cfg)
    : templates_(templates), responder_(responder), cfg_(cfg) {
  if (cfg_.maxSegmentLength < kMinMaxSegment) throw BadConfig("maxSegmentLength below 20");
}

DialogueTurn DialoguePipeline::handle(const ScenarioTrigger& trigger) {
  DialogueTurn turn;
  turn.trigger = trigger;
  turn.prompt = render_prompt(build_prompt(trigger, history_, templates_, cfg_.build));
  turn.response = respond(turn.prompt, responder_, cfg_.timeout);
  if (turn.response.empty()) throw ResponderUnavailable(responder_.capability().name + " returned no text");

  auto& m = turn.message;
  m.messageId = message_id_for(trigger);
  m.scenarioId = trigger.scenarioId;
  m.timestamp = trigger.firedAt;
  auto seg = segment(turn.response, cfg_.maxSegmentLength);
  m.segments = std::move(seg.segments);
  m.joins = std::move(seg.joins);
  m.sentiment = (lexicon_ ? *lexicon_ : Lexicon::bundled()).analyze(turn.response);
  m.stickerKeyword = m.sentiment.keyword;
  if (stickers_ && m.stickerKeyword) m.sticker = stickers_->lookup(*m.stickerKeyword);
  if (speech_) turn.speechJob = speech_->submit(m.segments);
  if (feedback_) feedback_->register_message(m.messageId);
  history_.push({m.messageId, Direction::Assistant, turn.response, trigger.firedAt, std::nullopt});
  return turn;
}

void DialoguePipeline::user_reply(std::string messageId, std::string text, std::int64_t timestamp) {
  history_.push({std::move(messageId), Direction::User, std::move(text), timestamp, std::nullopt});
}

}  // namespace contexta
