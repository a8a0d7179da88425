// Prints one PASS/FAIL line per acceptance criterion; exit status is the
// number of failures.
#include <chrono>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

#include "builders.hpp"
#include "contexta/engine.hpp"
#include "contexta/eval.hpp"
#include "contexta/prompt.hpp"
#include "contexta/segment.hpp"
#include "contexta/service/crypto.hpp"
#include "contexta/session.hpp"
#include "contexta/sim.hpp"
#include "equivalence.hpp"
#include "paragraphs.hpp"
#include "service_harness.hpp"

using namespace contexta;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

const std::string kSource = CONTEXTA_SOURCE_DIR;

// pinned limits
constexpr double kCorpusBudgetS = 300.0;
constexpr double kThroughputBudgetS = 60.0;
constexpr std::size_t kCorpusSeeds = 10;
constexpr std::size_t kEquivalenceTraces = 1000;
constexpr std::size_t kParagraphs = 10'000;
constexpr std::size_t kMaxSegment = 60;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 1) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome clean_corpus() {
  const auto t0 = Clock::now();
  const auto ids = all_scenarios();
  const auto report = evaluate_many(ids.size() * kCorpusSeeds, [&](std::size_t i) {
    return generate(corpus_script(ids[i / kCorpusSeeds], 1 + i % kCorpusSeeds));
  });
  const double wall = seconds_since(t0);
  bool exact = true;
  std::string worst;
  for (auto id : ids) {
    const auto& s = report.scenarios[static_cast<std::size_t>(id)];
    if (s.precision() != 1.0 || s.recall() != 1.0 || s.truePositives < static_cast<std::int64_t>(kCorpusSeeds)) {
      exact = false;
      worst += std::string(to_string(id)) + " ";
    }
  }
  return {exact && wall < kCorpusBudgetS,
          std::to_string(report.traces) + " traces, precision=recall=1.0 " + (exact ? "for all 16" : "broken: " + worst) +
              ", " + fmt(wall) + " s (limit " + fmt(kCorpusBudgetS, 0) + " s)"};
}

// Late-night social usage at home, screen on, 30-second usage records.
std::vector<SensorEvent> late_night(int records) {
  using namespace contexta::testing;
  const std::string day = "2023-11-15";
  std::vector<SensorEvent> ev;
  const auto begin = local(day, 0, 20);
  const auto end = local(day, 3, 50);
  ev.push_back(screen(begin, ScreenState::Unlocked));
  for (auto t = begin; t <= end; t += 5 * kSecondMs) ev.push_back(fix(t, LocationType::Home));
  const auto first = local(day, 0, 30);
  const auto span = local(day, 3, 45) - first;
  for (int k = 0; k < records; ++k) ev.push_back(usage(first + span * k / records, "com.sina.weibo", 30));
  sort_events(ev);
  return ev;
}

Outcome rule_fidelity() {
  const auto below = run_engine(late_night(119 * 2));
  const auto above = run_engine(late_night(121 * 2));
  const bool ok = below.empty() && above.size() == 1 && above[0].scenarioId == ScenarioId::ExcessiveAppUsage;
  return {ok, "119 min -> " + std::to_string(below.size()) + " triggers, 121 min -> " + std::to_string(above.size()) +
                  (above.size() == 1 ? " " + std::string(to_string(above[0].scenarioId)) : "") + " (exact)"};
}

Outcome equivalence() {
  const auto t = testing::run_equivalence_corpus(kEquivalenceTraces);
  const auto mismatches = t.signalMismatches + t.triggerMismatches + t.windowMismatches + t.dwellMismatches +
                          t.summaryMismatches + t.cooldownRepeats;
  return {t.traces == kEquivalenceTraces && mismatches == 0,
          std::to_string(t.traces) + " traces, " + std::to_string(t.triggers) + " triggers, " +
              std::to_string(mismatches) + " mismatches" + (mismatches ? ": " + t.firstMismatch : "")};
}

// generate -> replay (engine + dialogue) -> evaluate, hashed at each stage
std::array<std::string, 3> pipeline_digest(const ScenarioScript& script) {
  std::ostringstream traceText;
  generate_to(script, traceText);
  std::istringstream in(traceText.str());
  const auto trace = read_trace(in);
  SessionOptions opts;
  opts.engine.tzOffsetMinutes = trace.header.tzOffsetMinutes;
  FixtureStickerClient stickers(kSource + "/data/stickers");
  opts.stickers = &stickers;
  const auto session = run_session(trace, opts);
  const auto report = evaluate_trace(trace);
  return {crypto::sha256_hex(traceText.str()), crypto::sha256_hex(session_records(session)),
          crypto::sha256_hex(report.to_json())};
}

Outcome determinism() {
  const auto script = load_script_file(kSource + "/scripts/fig2_late_night.json");
  const auto a = pipeline_digest(script);
  const auto b = pipeline_digest(script);
  return {a == b, "trace " + a[0].substr(0, 12) + (a[0] == b[0] ? " = " : " != ") + b[0].substr(0, 12) +
                      ", records " + a[1].substr(0, 12) + (a[1] == b[1] ? " = " : " != ") + b[1].substr(0, 12) +
                      ", report " + a[2].substr(0, 12) + (a[2] == b[2] ? " = " : " != ") + b[2].substr(0, 12)};
}

Outcome segmentation() {
  std::mt19937_64 rng(20231115);
  std::size_t lossy = 0, oversized = 0, segments = 0;
  for (std::size_t i = 0; i < kParagraphs; ++i) {
    const auto text = testing::random_paragraph(rng);
    const auto s = segment(text, kMaxSegment);
    if (reconstruct(s) != text) ++lossy;
    for (const auto& seg : s.segments) {
      if (utf8_length(seg) > kMaxSegment) ++oversized;
    }
    segments += s.segments.size();
  }
  return {lossy == 0 && oversized == 0, std::to_string(kParagraphs) + " paragraphs, " + std::to_string(segments) +
                                            " segments, " + std::to_string(lossy) + " reconstruction failures, " +
                                            std::to_string(oversized) + " over " + std::to_string(kMaxSegment)};
}

Outcome service_contract() {
  using namespace contexta::testing;
  using contexta::service::RecordType;
  ServiceHarness h("acceptance");
  const auto ta = h.token("alice");
  const auto tb = h.token("bob");
  auto c = h.client();
  auto status = [](const httplib::Result& r) { return r ? r->status : -1; };
  const std::string json_t = "application/json";
  status(c.Post("/api/v1/sync/upload", auth(tb), batch("b", {message_rec("m-b", 10)}).dump(), json_t));

  // isolation matrix: alice's token against bob's resources
  auto up = batch("x", {trigger_rec(20)});
  up["userId"] = "bob";
  const std::vector<std::function<httplib::Result()>> probes = {
      [&] { return c.Post("/api/v1/sync/upload", auth(ta), up.dump(), json_t); },
      [&] { return c.Get("/api/v1/records/sensor?user=bob", auth(ta)); },
      [&] { return c.Get("/api/v1/records/trigger?user=bob", auth(ta)); },
      [&] { return c.Get("/api/v1/records/message?user=bob", auth(ta)); },
      [&] { return c.Get("/api/v1/records/feedback?user=bob", auth(ta)); },
      [&] { return c.Get("/api/v1/stream?user=bob", auth(ta)); },
      [&] {
        return c.Post("/api/v1/feedback", auth(ta), json{{"messageId", "m-b"}, {"emoji", "👍"}, {"userId", "bob"}}.dump(),
                      json_t);
      },
      [&] { return c.Get("/api/v1/feedback?messageId=m-b&user=bob", auth(ta)); },
      [&] { return c.Post("/api/v1/replay/control", auth(ta), json{{"command", "pause"}, {"userId", "bob"}}.dump(), json_t); },
      [&] { return c.Get("/api/v1/replay/control?user=bob", auth(ta)); },
      [&] { return c.Get("/api/v1/replay/status?user=bob", auth(ta)); },
  };
  std::size_t forbidden = 0;
  for (const auto& p : probes) forbidden += status(p()) == 403;

  // idempotency: the same batch twice leaves the store byte-identical
  std::vector<json> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(i % 2 ? sensor_rec(1000 + i * 10) : trigger_rec(1000 + i * 10));
  const auto b100 = batch("b100", recs);
  auto r1 = c.Post("/api/v1/sync/upload", auth(ta), b100.dump(), json_t);
  auto files = [&] {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(h.svc->store("alice").dir())) m[e.path().filename()] = slurp(e.path());
    return m;
  };
  const auto before = files();
  auto r2 = c.Post("/api/v1/sync/upload", auth(ta), b100.dump(), json_t);
  const bool idempotent = status(r1) == 200 && status(r2) == 200 && r1->body == r2->body && files() == before;

  // 8 concurrent uploaders; the watermark never moves backwards
  auto& store = h.svc->store("alice");
  std::atomic<bool> done{false}, monotonic{true};
  std::thread watcher([&] {
    std::int64_t last = 0;
    while (!done) {
      const auto w = store.watermark();
      if (w < last) monotonic = false;
      last = w;
    }
  });
  std::vector<std::thread> writers;
  std::atomic<std::size_t> accepted{0};
  for (int w = 0; w < 8; ++w) {
    writers.emplace_back([&, w] {
      auto cl = h.client();
      for (int k = 0; k < 25; ++k) {
        const std::int64_t base = 10'000 + (k * 8 + w) * 100;
        auto r = cl.Post("/api/v1/sync/upload", auth(ta),
                         batch("w" + std::to_string(w) + "-" + std::to_string(k), {sensor_rec(base), sensor_rec(base + 1)}).dump(),
                         json_t);
        if (r && r->status == 200) accepted += 2;
      }
    });
  }
  for (auto& t : writers) t.join();
  done = true;
  watcher.join();
  const bool concurrent = monotonic && store.count(RecordType::Sensor) == 50 + accepted;

  // stream resume: events published while disconnected arrive on reconnect
  const auto firstId = h.svc->hub("alice").last_id();
  status(c.Post("/api/v1/sync/upload", auth(ta), batch("gap", {trigger_rec(900'000), message_rec("m-gap", 900'001)}).dump(),
                json_t));
  const auto resumed = read_stream(h.port, ta, "", 2, {{"Last-Event-ID", std::to_string(firstId)}});
  const bool resume = resumed.size() == 2 && resumed[0].type == "trigger" && resumed[1].type == "message";

  const bool ok = forbidden == probes.size() && idempotent && concurrent && resume;
  return {ok, "isolation " + std::to_string(forbidden) + "/" + std::to_string(probes.size()) + " 403, idempotent " +
                  (idempotent ? "yes" : "no") + ", watermark monotonic under 8 writers " + (concurrent ? "yes" : "no") +
                  ", resume " + std::to_string(resumed.size()) + "/2"};
}

Outcome golden_prompt() {
  const LocalClock clock(480);
  const auto day = parse_date("2023-11-15");
  ScenarioTrigger t;
  t.scenarioId = ScenarioId::ExcessiveAppUsage;
  t.firedAt = clock.at(day, 3 * kHourMs + 12 * kMinuteMs);
  t.windowStart = clock.midnight(day);
  t.windowEnd = t.firedAt;
  t.metrics = {{"cumulativeUsageMinutes", 120}};
  t.cooldownKey = "excessive_app_usage/night-2023-11-14";
  const auto text = render_prompt(build_prompt(t, InteractionHistory{}, TemplateSet::bundled()));
  const auto golden = slurp(kSource + "/tests/golden/excessive_app_usage.prompt");
  const auto paper = slurp(kSource + "/paper.md");
  std::size_t verbatim = 0;
  for (const std::string label : {"Role", "Task", "Requirement", "Style Reference"}) {
    std::smatch m;
    if (std::regex_search(paper, m, std::regex("\\\\textit\\{" + label + ":\\} ``([^']*)''")) &&
        golden.find("\n" + label + ": " + m[1].str()) != std::string::npos) {
      ++verbatim;
    }
  }
  const bool match = !golden.empty() && text == golden;
  return {match && verbatim == 4, std::string("render ") + (match ? "matches" : "differs from") + " golden, " +
                                      std::to_string(verbatim) + "/4 sections verbatim from the paper"};
}

Outcome throughput() {
  const auto path = fs::temp_directory_path() / "contexta-acceptance-24h.jsonl";
  {
    std::ofstream out(path, std::ios::binary);
    generate_to(full_day_script(2024), out);
  }
  std::ifstream in(path, std::ios::binary);
  TraceReader reader(in);
  SessionOptions opts;
  opts.engine.tzOffsetMinutes = reader.header().tzOffsetMinutes;
  std::size_t motion = 0;
  SessionHooks hooks;
  hooks.before_event = [&](const SensorEvent& e) {
    motion += e.channel() == Channel::Accelerometer || e.channel() == Channel::Gyroscope;
  };
  const auto t0 = Clock::now();
  const auto r = run_session([&] { return reader.next(); }, opts, hooks);
  const double wall = seconds_since(t0);
  fs::remove(path);
  return {wall < kThroughputBudgetS && r.total_triggers() == kScenarioCount,
          std::to_string(r.replay.delivered) + " events (" + std::to_string(motion) + " motion), " +
              std::to_string(r.total_triggers()) + " triggers, " + fmt(wall) + " s (limit " +
              fmt(kThroughputBudgetS, 0) + " s)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"clean-corpus-exactness", clean_corpus},  {"rule-fidelity-119-121", rule_fidelity},
      {"stream-batch-equivalence", equivalence}, {"determinism", determinism},
      {"segmentation-lossless", segmentation},   {"service-contract", service_contract},
      {"golden-prompt", golden_prompt},          {"throughput-24h", throughput},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << criteria.size() - failures << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures;
}
