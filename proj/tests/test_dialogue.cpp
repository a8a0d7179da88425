#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "contexta/dialogue.hpp"
#include "contexta/error.hpp"
#include "doctest.h"
#include "paragraphs.hpp"

using namespace contexta;

namespace {

const std::string kSource = CONTEXTA_SOURCE_DIR;
const std::string kThumbsUp = "\xF0\x9F\x91\x8D";
const std::string kHeart = "\xE2\x9D\xA4\xEF\xB8\x8F";

ScenarioTrigger trigger(ScenarioId id, std::map<std::string, double> metrics) {
  ScenarioTrigger t;
  t.scenarioId = id;
  t.firedAt = 1'700'000'000'000;
  t.windowStart = t.firedAt - 3'600'000;
  t.windowEnd = t.firedAt;
  t.metrics = std::move(metrics);
  return t;
}

std::map<std::string, double> full_metrics(ScenarioId id) {
  std::map<std::string, double> m;
  double v = 1;
  for (auto k : scenario_info(id).metricKeys) m[std::string(k)] = v++;
  return m;
}

class SlowResponder : public ResponderClient {
 public:
  explicit SlowResponder(std::chrono::milliseconds d) : d_(d) {}
  ResponderCapability capability() const override { return {"slow", false}; }
  std::string respond(const std::string&) override {
    std::this_thread::sleep_for(d_);
    return "late";
  }

 private:
  std::chrono::milliseconds d_;
};

class DownResponder : public ResponderClient {
 public:
  ResponderCapability capability() const override { return {"down", false}; }
  std::string respond(const std::string&) override { throw std::runtime_error("connection refused"); }
};

bool valid_segmentation(const std::string& text, const Segmentation& s, std::size_t max) {
  if (reconstruct(s) != text) return false;
  if (!text.empty() && s.segments.empty()) return false;
  if (s.joins.size() + 1 != std::max<std::size_t>(s.segments.size(), 1)) return false;
  for (const auto& seg : s.segments) {
    if (seg.empty() || utf8_length(seg) > max) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stub responder opens the excessive usage reply with the paper's words") {
  StubResponder stub;
  const auto prompt = render_prompt(build_prompt(
      trigger(ScenarioId::ExcessiveAppUsage, {{"cumulativeUsageMinutes", 120}}), InteractionHistory{},
      TemplateSet::bundled()));
  const auto text = respond(prompt, stub);
  CHECK(text.starts_with("It seems like you've been scrolling for quite a while"));
  CHECK(text.find("120 minutes") != std::string::npos);
  CHECK(respond(prompt, stub) == text);
}

TEST_CASE("stub responder covers every scenario") {
  StubResponder stub;
  for (auto id : all_scenarios()) {
    CAPTURE(to_string(id));
    const auto prompt =
        render_prompt(build_prompt(trigger(id, full_metrics(id)), InteractionHistory{}, TemplateSet::bundled()));
    const auto text = stub.respond(prompt);
    CHECK_FALSE(text.empty());
    CHECK(text.find('?' + std::string("?")) == std::string::npos);
    CHECK(text.find('{') == std::string::npos);
  }
}

TEST_CASE("responder faults") {
  SlowResponder slow(std::chrono::milliseconds(600));
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(respond("prompt", slow, std::chrono::milliseconds(200)), ResponderTimeout);
  const auto waited = std::chrono::steady_clock::now() - t0;
  CHECK(waited < std::chrono::milliseconds(200 + 1000));
  CHECK(waited >= std::chrono::milliseconds(200));

  DownResponder down;
  CHECK_THROWS_AS(respond("prompt", down), ResponderUnavailable);
  StubResponder stub;
  CHECK_THROWS_AS(respond("", stub), std::invalid_argument);
  std::this_thread::sleep_for(std::chrono::milliseconds(500));  // let the slow helper finish
}

TEST_CASE("segmentation examples") {
  auto s = segment("Hi.");
  REQUIRE(s.segments.size() == 1);
  CHECK(s.segments[0] == "Hi.");
  CHECK(s.joins.empty());

  // three sentences of 66, 66 and 66 characters
  const std::string a(65, 'a'), b(65, 'b'), c(65, 'c');
  const std::string text = a + ". " + b + "! " + c + "?";
  CHECK(utf8_length(text) == 200);
  s = segment(text, 80);
  REQUIRE(s.segments.size() == 3);
  CHECK(s.segments[0] == a + ".");
  CHECK(s.segments[1] == b + "!");
  CHECK(s.segments[2] == c + "?");
  CHECK(reconstruct(s) == text);

  // CJK terminators split without spaces
  s = segment("今天很累。休息一下吧！好吗？");
  REQUIRE(s.segments.size() == 3);
  CHECK(s.segments[0] == "今天很累。");
  CHECK(s.joins == std::vector<bool>{false, false});

  // long sentence falls back to clauses
  const std::string longer = std::string(50, 'x') + ", " + std::string(50, 'y') + ", " + std::string(50, 'z') + ".";
  s = segment(longer, 110);
  REQUIRE(s.segments.size() == 2);
  CHECK(s.segments[0] == std::string(50, 'x') + ", " + std::string(50, 'y') + ",");
  CHECK(reconstruct(s) == longer);

  // decimals are not sentence ends
  CHECK(segment("It is 3.5 km away. Nice.").segments.size() == 2);
  CHECK(segment("").segments.empty());
  CHECK_THROWS_AS(segment("abc", 19), BadConfig);
}

TEST_CASE("segmentation is lossless and bounded on random paragraphs") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const auto text = testing::random_paragraph(rng);
    const std::size_t max = 20 + rng() % 120;
    const auto s = segment(text, max);
    CAPTURE(text);
    CAPTURE(max);
    REQUIRE(valid_segmentation(text, s, max));
  }
}

TEST_CASE("sentiment fixture") {
  std::ifstream in(kSource + "/tests/fixtures/sentiment_cases.tsv");
  REQUIRE(in.good());
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    std::istringstream row(line);
    std::string text, frac, keyword;
    std::getline(row, text, '\t');
    std::getline(row, frac, '\t');
    std::getline(row, keyword, '\t');
    const auto slash = frac.find('/');
    const double expected = std::stod(frac.substr(0, slash)) / std::stod(frac.substr(slash + 1));
    CAPTURE(text);
    const auto r = sentiment_keyword(text);
    CHECK(r.score == doctest::Approx(expected).epsilon(1e-12));
    if (keyword == "-") {
      CHECK_FALSE(r.keyword.has_value());
    } else {
      REQUIRE(r.keyword.has_value());
      CHECK(*r.keyword == keyword);
    }
    ++cases;
  }
  CHECK(cases == 20);
}

TEST_CASE("sentiment properties") {
  const auto& lex = Lexicon::bundled();
  CHECK(lex.size() >= 190);
  const auto empty = sentiment_keyword("");
  CHECK(empty.score == 0.0);
  CHECK_FALSE(empty.keyword.has_value());
  CHECK(sentiment_keyword("wonderful happy good 开心").score > 0);
  CHECK(sentiment_keyword("sad 难过").score < 0);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto r = sentiment_keyword(testing::random_paragraph(rng));
    CHECK(r.score > -1.0);
    CHECK(r.score < 1.0);
  }
  CHECK_THROWS_AS(Lexicon::parse("good\tx\n"), BadConfig);
  CHECK_THROWS_AS(Lexicon::parse("good 1\n"), BadConfig);
}

TEST_CASE("sticker fixtures") {
  FixtureStickerClient stickers(kSource + "/tests/fixtures/stickers");
  CHECK(stickers.lookup("love") == "sticker://love/hearts-01");
  CHECK(stickers.lookup("开心") == "sticker://开心/smile-04");
  CHECK_FALSE(stickers.lookup("nothing").has_value());
  CHECK_FALSE(stickers.lookup("../stickers/love").has_value());
  HttpStickerClient offline("http://127.0.0.1:1");
  CHECK_FALSE(offline.lookup("love").has_value());
}

TEST_CASE("feedback store") {
  FeedbackStore store;
  store.register_message("m1");
  const auto f = store.record("m1", kThumbsUp, "alice", 10);
  CHECK(store.for_message("m1") == std::vector<FeedbackRecord>{f});
  store.record("m1", kHeart, "alice", 11);
  const auto got = store.for_message("m1");
  REQUIRE(got.size() == 1);
  CHECK(got[0].emoji == kHeart);
  store.record("m1", kThumbsUp, "bob", 12);
  CHECK(store.for_message("m1").size() == 2);
  CHECK_THROWS_AS(store.record("nope", kThumbsUp, "alice", 1), UnknownMessage);
  CHECK_THROWS_AS(store.record("m1", "\xF0\x9F\x8D\x95", "alice", 1), UnknownEmoji);

  // concurrent writers keep one record per (message, user)
  store.register_message("m2");
  std::vector<std::jthread> writers;
  for (int w = 0; w < 8; ++w) {
    writers.emplace_back([&, w] {
      for (int i = 0; i < 200; ++i) {
        store.record("m2", std::string(kEmojiPalette[static_cast<std::size_t>(i % 6)]), "u" + std::to_string(w % 4), i);
      }
    });
  }
  writers.clear();
  CHECK(store.for_message("m2").size() == 4);
  CHECK(store.log_size() == 3 + 1600);

  // persistence
  const auto path = std::filesystem::temp_directory_path() / "contexta_feedback_test.jsonl";
  std::filesystem::remove(path);
  {
    FeedbackStore disk(path.string());
    disk.register_message("m9");
    disk.record("m9", kThumbsUp, "carol", 1);
    disk.record("m9", kHeart, "carol", 2);
  }
  FeedbackStore again(path.string());
  CHECK(again.has_message("m9"));
  REQUIRE(again.for_message("m9").size() == 1);
  CHECK(again.for_message("m9")[0].emoji == kHeart);
  std::filesystem::remove(path);
}

TEST_CASE("speech worker") {
  RecorderBackend rec;
  SpeechWorker worker(rec);
  const auto id = worker.submit({"one.", "two.", "three."});
  const auto job = worker.wait(id);
  CHECK(job.state == SpeechJob::State::Done);
  const auto log = rec.log();
  REQUIRE(log.size() == 3);
  CHECK(log[0].text == "one.");
  CHECK(log[1].text == "two.");
  CHECK(log[2].text == "three.");
  CHECK_THROWS_AS(worker.submit({}), std::invalid_argument);

  rec.set_available(false);
  const auto failed = worker.wait(worker.submit({"x", "y"}));
  CHECK(failed.state == SpeechJob::State::Failed);
  CHECK(failed.completed == 0);
  CHECK(rec.log().size() == 3);
}

TEST_CASE("pipeline") {
  StubResponder stub;
  RecorderBackend rec;
  SpeechWorker worker(rec);
  FeedbackStore feedback;
  FixtureStickerClient stickers(kSource + "/tests/fixtures/stickers");
  DialoguePipeline pipe(TemplateSet::bundled(), stub, {.maxSegmentLength = 60});
  pipe.set_speech(&worker);
  pipe.set_feedback(&feedback);
  pipe.set_stickers(&stickers);

  const auto trig = trigger(ScenarioId::ExcessiveAppUsage, {{"cumulativeUsageMinutes", 121}});
  const auto turn = pipe.handle(trig);
  const auto& m = turn.message;
  CHECK(m.messageId == message_id_for(trig));
  CHECK(message_text(m) == turn.response);
  CHECK(m.segments.size() >= 3);
  for (const auto& s : m.segments) CHECK(utf8_length(s) <= 60);
  CHECK(m.segments[0].starts_with("It seems like you've been scrolling"));
  CHECK(m.stickerKeyword == "tired");
  CHECK(m.sticker == "sticker://tired/yawn-03");
  CHECK(m.sentiment.label() == Sentiment::Negative);
  CHECK(turn.prompt.find("Scenario: excessive_app_usage") != std::string::npos);
  CHECK(feedback.has_message(m.messageId));
  CHECK(pipe.history().size() == 1);

  REQUIRE(turn.speechJob);
  worker.drain();
  CHECK(rec.log().size() == m.segments.size());

  // wire round trip
  const auto back = parse_message(serialize_message(m));
  CHECK(back.segments == m.segments);
  CHECK(back.joins == m.joins);
  CHECK(back.messageId == m.messageId);
  CHECK(back.stickerKeyword == m.stickerKeyword);
  CHECK(back.scenarioId == m.scenarioId);

  // speech backend down: the text message is still produced
  rec.set_available(false);
  auto later = trig;
  later.firedAt += 1000;
  const auto turn2 = pipe.handle(later);
  CHECK_FALSE(turn2.message.segments.empty());
  CHECK(worker.wait(*turn2.speechJob).state == SpeechJob::State::Failed);

  // history makes it into the next prompt
  pipe.user_reply("u1", "just can't sleep", later.firedAt + 10);
  later.firedAt += 1000;
  const auto turn3 = pipe.handle(later);
  CHECK(turn3.prompt.find("- user: just can't sleep") != std::string::npos);
}
