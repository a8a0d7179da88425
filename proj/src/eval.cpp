#include "contexta/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "contexta/error.hpp"
#include "contexta/json_line.hpp"

namespace contexta {

double ScenarioScore::precision() const {
  const auto d = truePositives + falsePositives;
  return d == 0 ? 1.0 : static_cast<double>(truePositives) / static_cast<double>(d);
}

double ScenarioScore::recall() const {
  return expected == 0 ? 1.0 : static_cast<double>(truePositives) / static_cast<double>(expected);
}

ScenarioScore& ScenarioScore::operator+=(const ScenarioScore& o) {
  truePositives += o.truePositives;
  falsePositives += o.falsePositives;
  falseNegatives += o.falseNegatives;
  expected += o.expected;
  return *this;
}

std::int64_t EvalReport::expected() const {
  std::int64_t n = 0;
  for (const auto& s : scenarios) n += s.expected;
  return n;
}

std::int64_t EvalReport::detected() const {
  std::int64_t n = 0;
  for (const auto& s : scenarios) n += s.truePositives;
  return n;
}

double EvalReport::accuracy() const {
  const auto e = expected();
  return e == 0 ? 1.0 : static_cast<double>(detected()) / static_cast<double>(e);
}

EvalReport& EvalReport::operator+=(const EvalReport& o) {
  for (std::size_t i = 0; i < kScenarioCount; ++i) scenarios[i] += o.scenarios[i];
  traces += o.traces;
  events += o.events;
  triggers += o.triggers;
  return *this;
}

namespace {

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

std::string EvalReport::to_json() const {
  std::string per = "{";
  bool first = true;
  for (auto id : all_scenarios()) {
    const auto& s = scenarios[static_cast<std::size_t>(id)];
    JsonLine j;
    j.field("truePositives", s.truePositives)
        .field("falsePositives", s.falsePositives)
        .field("falseNegatives", s.falseNegatives)
        .field("expected", s.expected)
        .raw("precision", fixed6(s.precision()))
        .raw("recall", fixed6(s.recall()));
    if (!first) per += ",";
    first = false;
    per += "\"" + std::string(to_string(id)) + "\":" + j.str();
  }
  per += "}";
  JsonLine out;
  out.raw("scenarios", per)
      .field("expected", expected())
      .field("detected", detected())
      .raw("accuracy", fixed6(accuracy()))
      .raw("runtime", JsonLine()
                          .field("traces", static_cast<std::int64_t>(traces))
                          .field("events", static_cast<std::int64_t>(events))
                          .field("triggers", static_cast<std::int64_t>(triggers))
                          .str());
  return out.str();
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(24) << "scenario" << std::right << std::setw(6) << "TP"
     << std::setw(6) << "FP" << std::setw(6) << "FN" << std::setw(10) << "precision"
     << std::setw(8) << "recall" << "\n";
  os << std::fixed << std::setprecision(3);
  for (auto id : all_scenarios()) {
    const auto& s = scenarios[static_cast<std::size_t>(id)];
    os << std::left << std::setw(24) << to_string(id) << std::right << std::setw(6)
       << s.truePositives << std::setw(6) << s.falsePositives << std::setw(6)
       << s.falseNegatives << std::setw(10) << s.precision() << std::setw(8) << s.recall()
       << "\n";
  }
  os << "accuracy " << accuracy() << " (" << detected() << "/" << expected() << ")\n";
  os << "traces " << traces << ", events " << events << ", triggers " << triggers << ", "
     << std::setprecision(1) << wallMs << " ms\n";
  return os.str();
}

EvalReport score_triggers(const std::vector<ScenarioTrigger>& triggers,
                          const std::vector<GroundTruthLabel>& labels) {
  EvalReport rep;
  std::vector<std::int64_t> filled(labels.size(), 0);
  for (const auto& l : labels) rep.scenarios[static_cast<std::size_t>(l.scenarioId)].expected +=
      l.expectedTriggerCount;
  for (const auto& t : triggers) {
    auto& s = rep.scenarios[static_cast<std::size_t>(t.scenarioId)];
    bool hit = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& l = labels[i];
      if (l.scenarioId == t.scenarioId && t.firedAt >= l.windowStart && t.firedAt <= l.windowEnd &&
          filled[i] < l.expectedTriggerCount) {
        ++filled[i];
        hit = true;
        break;
      }
    }
    if (hit) ++s.truePositives;
    else ++s.falsePositives;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rep.scenarios[static_cast<std::size_t>(labels[i].scenarioId)].falseNegatives +=
        labels[i].expectedTriggerCount - filled[i];
  }
  rep.triggers = triggers.size();
  return rep;
}

EvalReport evaluate_trace(const Trace& trace, const EvalOptions& opts, std::size_t index) {
  if (trace.labels.empty()) throw MissingLabels("trace for '" + trace.header.userId + "' has no labels");
  EngineConfig cfg = opts.engine;
  cfg.tzOffsetMinutes = trace.header.tzOffsetMinutes;
  std::vector<ScenarioTrigger> trig;
  std::size_t events = 0;
  if (opts.noise) {
    const Trace noisy = perturb(trace, *opts.noise, opts.noiseSeed + index);
    trig = run_engine(noisy.events, cfg);
    events = noisy.events.size();
  } else {
    trig = run_engine(trace.events, cfg);
    events = trace.events.size();
  }
  auto rep = score_triggers(trig, trace.labels);
  rep.traces = 1;
  rep.events = events;
  return rep;
}

EvalReport evaluate_many(std::size_t count, const std::function<Trace(std::size_t)>& load,
                         const EvalOptions& opts) {
  const auto began = std::chrono::steady_clock::now();
  unsigned workers = opts.workers;
  if (workers == 0) workers = std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));

  std::vector<std::optional<EvalReport>> parts(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failMu;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        const Trace t = load(i);
        if (t.labels.empty()) continue;
        parts[i] = evaluate_trace(t, opts, i);
      } catch (...) {
        std::lock_guard lk(failMu);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  if (failure) std::rethrow_exception(failure);

  EvalReport total;
  bool any = false;
  for (auto& p : parts) {
    if (!p) continue;
    any = true;
    total += *p;
  }
  if (!any) throw MissingLabels("no labelled traces among " + std::to_string(count) + " inputs");
  total.wallMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - began).count();
  return total;
}

std::vector<std::string> list_trace_files(const std::string& path) {
  namespace fs = std::filesystem;
  std::vector<std::string> out;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".jsonl") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
  } else {
    out.push_back(path);
  }
  return out;
}

}  // namespace contexta
