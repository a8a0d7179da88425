#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contexta/engine.hpp"
#include "contexta/perturb.hpp"
#include "contexta/trace.hpp"

namespace contexta {

struct ScenarioScore {
  std::int64_t truePositives = 0;
  std::int64_t falsePositives = 0;
  std::int64_t falseNegatives = 0;
  std::int64_t expected = 0;

  // 1.0 when the denominator is zero
  double precision() const;
  double recall() const;
  ScenarioScore& operator+=(const ScenarioScore& o);
};

struct EvalReport {
  std::array<ScenarioScore, kScenarioCount> scenarios{};
  std::size_t traces = 0;
  std::size_t events = 0;
  std::size_t triggers = 0;
  double wallMs = 0.0;  // not part of to_json()

  std::int64_t expected() const;
  std::int64_t detected() const;  // true positives
  /// detected / expected, 1.0 when nothing is expected.
  double accuracy() const;
  EvalReport& operator+=(const EvalReport& o);

  /// Canonical JSON; stable across runs for identical inputs.
  std::string to_json() const;
  /// Aligned text table with a runtime footer.
  std::string to_table() const;
};

/// Matches triggers to label windows. A trigger is a true positive when it
/// falls within [windowStart, windowEnd] of a same-scenario label that has
/// not yet received its expectedTriggerCount; every other trigger is a false
/// positive. Unfilled expectations are false negatives.
EvalReport score_triggers(const std::vector<ScenarioTrigger>& triggers,
                          const std::vector<GroundTruthLabel>& labels);

struct EvalOptions {
  EngineConfig engine;
  std::optional<NoiseProfile> noise;
  std::uint64_t noiseSeed = 0;  // trace i uses noiseSeed + i
  unsigned workers = 0;         // 0: hardware concurrency, capped at 8
};

/// Throws MissingLabels when the trace has no labels.
EvalReport evaluate_trace(const Trace& trace, const EvalOptions& opts = {},
                          std::size_t index = 0);

/// Evaluates `count` traces produced by `load(i)` on a bounded worker pool.
/// Per-trace reports are merged in index order. Throws MissingLabels when
/// no trace carries a label.
EvalReport evaluate_many(std::size_t count, const std::function<Trace(std::size_t)>& load,
                         const EvalOptions& opts = {});

/// Trace files (.jsonl) under `path`, sorted; or `path` itself when it is a file.
std::vector<std::string> list_trace_files(const std::string& path);

}  // namespace contexta
