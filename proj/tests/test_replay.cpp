#include <chrono>
#include <cmath>
#include <thread>

#include "contexta/error.hpp"
#include "contexta/eval.hpp"
#include "contexta/perturb.hpp"
#include "contexta/replay.hpp"
#include "contexta/sim.hpp"
#include "doctest.h"

using namespace contexta;

namespace {

Trace light_trace(std::size_t n, std::int64_t step = 100) {
  Trace t;
  t.header = {1, "u", 1'000'000, 1'000'000 + static_cast<std::int64_t>(n) * step, 480};
  for (std::size_t i = 0; i < n; ++i) {
    t.events.push_back({1'000'000 + static_cast<std::int64_t>(i) * step, Light{static_cast<double>(i % 50)}});
  }
  t.labels.push_back({ScenarioId::Walking, t.header.startTime, t.header.endTime, 1});
  return t;
}

struct Recorder : ReplaySink {
  std::vector<std::int64_t> ts;
  std::vector<std::chrono::steady_clock::time_point> wall;
  int ends = 0;
  ReplayReport last;
  void on_event(const SensorEvent& e) override {
    ts.push_back(e.timestamp);
    wall.push_back(std::chrono::steady_clock::now());
  }
  void on_end(const ReplayReport& r) override {
    ++ends;
    last = r;
  }
};

}  // namespace

TEST_CASE("null noise is the identity") {
  const Trace t = generate(corpus_script(ScenarioId::MusicPlayback, 1));
  const Trace p = perturb(t, NoiseProfile{}, 99);
  CHECK(p.events == t.events);
  CHECK(p.labels == t.labels);
  CHECK(p.header == t.header);
}

TEST_CASE("dropout stays within a binomial bound") {
  const Trace t = light_trace(10'000);
  NoiseProfile n;
  n.dropoutRate = 0.5;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto kept = static_cast<double>(perturb(t, n, seed).events.size());
    const double sigma = std::sqrt(10'000 * 0.25);
    CHECK(std::abs(kept - 5000.0) <= 3 * sigma);
  }
  // deterministic in the seed
  CHECK(perturb(t, n, 4).events == perturb(t, n, 4).events);
}

TEST_CASE("perturbed traces remain valid") {
  const Trace t = generate(corpus_script(ScenarioId::Walking, 3));
  NoiseProfile n;
  n.dropoutRate = 0.2;
  n.jitterStdDev = 800;
  n.jitterCapMs = 1500;
  n.bias[static_cast<std::size_t>(Channel::Light)] = -500;  // clamps at zero
  n.bias[static_cast<std::size_t>(Channel::Battery)] = 30;
  n.bias[static_cast<std::size_t>(Channel::Accelerometer)] = 0.3;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Trace p = perturb(t, n, seed);
    CHECK(validate_trace(p).valid());
    CHECK(p.labels == t.labels);
    CHECK(p.events.size() < t.events.size());
  }
}

TEST_CASE("jitter never exceeds its cap") {
  Trace t = light_trace(2000, 1000);
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    std::get<Light>(t.events[i].payload).lightLevel = static_cast<double>(i);
  }
  NoiseProfile n;
  n.jitterStdDev = 5000;
  n.jitterCapMs = 700;
  const Trace p = perturb(t, n, 8);
  REQUIRE(p.events.size() == t.events.size());
  for (const auto& e : p.events) {
    const auto i = static_cast<std::size_t>(std::get<Light>(e.payload).lightLevel);
    CHECK(std::llabs(e.timestamp - t.events[i].timestamp) <= 700);
  }
}

TEST_CASE("replay pacing") {
  Trace t = light_trace(2, 1000);
  Recorder r;
  const auto rep = replay(t, r, {.speed = 10.0});
  REQUIRE(r.ts.size() == 2);
  const double gap = std::chrono::duration<double, std::milli>(r.wall[1] - r.wall[0]).count();
  CHECK(gap == doctest::Approx(100.0).epsilon(0.25));
  CHECK(rep.delivered == 2);
  CHECK(r.ends == 1);
}

TEST_CASE("replay counts") {
  Trace empty;
  Recorder r0;
  CHECK(replay(empty, r0).delivered == 0);
  CHECK(r0.ends == 1);

  const Trace t = generate(corpus_script(ScenarioId::StoryReminder, 4));
  Recorder r;
  CHECK(replay(t, r).delivered == t.events.size());
  CHECK(std::is_sorted(r.ts.begin(), r.ts.end()));

  // streaming source
  std::size_t i = 0;
  Recorder r2;
  const auto rep = replay([&]() -> std::optional<SensorEvent> {
    if (i >= t.events.size()) return std::nullopt;
    return t.events[i++];
  }, r2);
  CHECK(rep.delivered == t.events.size());
  CHECK(r2.ts == r.ts);
}

TEST_CASE("replay control") {
  const Trace t = light_trace(100, 1000);
  SUBCASE("pause holds delivery until resume") {
    ReplayControl ctl;
    Recorder r;
    ctl.pause();
    std::jthread th([&] { replay(t, r, {.speed = std::nullopt, .control = &ctl}); });
    std::this_thread::sleep_for(std::chrono::milliseconds(150));
    CHECK(r.ts.empty());
    ctl.resume();
    th.join();
    CHECK(r.ts.size() == 100);
  }
  SUBCASE("seek skips forward and back") {
    ReplayControl ctl;
    ctl.seek(t.events[90].timestamp);
    Recorder r;
    const auto rep = replay(t, r, {.control = &ctl});
    CHECK(rep.delivered == 10);
    CHECK(rep.skipped == 90);
    CHECK(r.ts.front() == t.events[90].timestamp);
  }
  SUBCASE("speed change and stop during a paced replay") {
    ReplayControl ctl;
    Recorder r;
    std::jthread th([&] { replay(t, r, {.speed = 1.0, .control = &ctl}); });
    std::this_thread::sleep_for(std::chrono::milliseconds(120));
    ctl.set_speed(0);  // max
    th.join();
    CHECK(r.ts.size() == 100);

    Recorder r2;
    ReplayControl ctl2;
    ctl2.stop();
    const auto rep = replay(t, r2, {.control = &ctl2});
    CHECK(rep.stopped);
    CHECK(rep.delivered == 0);
    CHECK(r2.ends == 1);
  }
}

TEST_CASE("sink failure flushes the final marker") {
  struct Failing : Recorder {
    void on_event(const SensorEvent& e) override {
      if (ts.size() == 3) throw std::runtime_error("disk full");
      Recorder::on_event(e);
    }
  } f;
  const Trace t = light_trace(10);
  CHECK_THROWS_AS(replay(t, f), SinkFailure);
  CHECK(f.ends == 1);
  CHECK(f.last.failed);
  CHECK(f.last.delivered == 3);
}

TEST_CASE("parse_speed") {
  CHECK_FALSE(parse_speed("max").has_value());
  CHECK(*parse_speed("2.5") == 2.5);
  CHECK_THROWS_AS(parse_speed("0"), BadConfig);
  CHECK_THROWS_AS(parse_speed("fast"), BadConfig);
}

TEST_CASE("trigger scoring") {
  auto trig = [](ScenarioId id, std::int64_t t) { return ScenarioTrigger{id, t, t, t, {}, ""}; };
  const std::vector<GroundTruthLabel> labels = {
      {ScenarioId::Walking, 100, 200, 1},
      {ScenarioId::Walking, 300, 400, 2},
      {ScenarioId::Nap, 100, 200, 1},
  };
  const std::vector<ScenarioTrigger> fired = {
      trig(ScenarioId::Walking, 150),  // TP
      trig(ScenarioId::Walking, 160),  // FP: first label already full
      trig(ScenarioId::Walking, 300),  // TP (inclusive start)
      trig(ScenarioId::Running, 150),  // FP: no label
      trig(ScenarioId::Nap, 201),      // FP: outside window
  };
  const auto rep = score_triggers(fired, labels);
  const auto& w = rep.scenarios[static_cast<std::size_t>(ScenarioId::Walking)];
  CHECK(w.truePositives == 2);
  CHECK(w.falsePositives == 1);
  CHECK(w.falseNegatives == 1);
  CHECK(w.expected == 3);
  CHECK(w.precision() == doctest::Approx(2.0 / 3));
  CHECK(w.recall() == doctest::Approx(2.0 / 3));
  const auto& n = rep.scenarios[static_cast<std::size_t>(ScenarioId::Nap)];
  CHECK(n.truePositives == 0);
  CHECK(n.falsePositives == 1);
  CHECK(n.falseNegatives == 1);
  CHECK(rep.scenarios[static_cast<std::size_t>(ScenarioId::Running)].falsePositives == 1);
  CHECK(rep.accuracy() == doctest::Approx(2.0 / 4));
  for (const auto& s : rep.scenarios) {
    CHECK(s.truePositives + s.falseNegatives == s.expected);
    CHECK(s.precision() >= 0.0);
    CHECK(s.precision() <= 1.0);
  }
}

TEST_CASE("evaluation over traces") {
  Trace unlabeled = light_trace(10);
  unlabeled.labels.clear();
  CHECK_THROWS_AS(evaluate_trace(unlabeled), MissingLabels);
  CHECK_THROWS_AS(evaluate_many(2, [&](std::size_t) { return unlabeled; }), MissingLabels);

  const std::array ids = {ScenarioId::Walking, ScenarioId::MusicPlayback, ScenarioId::MealPattern};
  auto load = [&](std::size_t i) { return generate(corpus_script(ids[i], 1)); };
  EvalOptions one;
  one.workers = 1;
  EvalOptions many;
  many.workers = 3;
  const auto a = evaluate_many(ids.size(), load, one);
  const auto b = evaluate_many(ids.size(), load, many);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.accuracy() == 1.0);
  CHECK(a.traces == 3);

  EvalOptions noisy = many;
  noisy.noise = NoiseProfile{};
  noisy.noise->dropoutRate = 0.3;
  noisy.noiseSeed = 5;
  const auto c = evaluate_many(ids.size(), load, noisy);
  CHECK(c.accuracy() <= 1.0);
  CHECK(c.to_json() == evaluate_many(ids.size(), load, noisy).to_json());
  CHECK(c.to_table().find("accuracy") != std::string::npos);
}
