#pragma once

#include <random>
#include <sstream>
#include <string>

#include "contexta/engine.hpp"
#include "reference.hpp"
#include "soup.hpp"

namespace contexta::testing {

struct EquivalenceTally {
  std::size_t traces = 0;
  std::size_t events = 0;
  std::size_t triggers = 0;
  std::size_t signalMismatches = 0;
  std::size_t triggerMismatches = 0;
  std::size_t windowMismatches = 0;
  std::size_t dwellMismatches = 0;
  std::size_t summaryMismatches = 0;
  std::size_t cooldownRepeats = 0;
  std::string firstMismatch;

  std::size_t mismatches() const {
    return signalMismatches + triggerMismatches + windowMismatches + dwellMismatches +
           summaryMismatches + cooldownRepeats;
  }
};

/// Streams `ev` through the engine and compares everything observable with
/// the brute-force reference: signals at each event, the full trigger
/// sequence, window usage over random windows, dwell per label and every
/// daily summary the trace touches.
inline void check_equivalence(const std::vector<SensorEvent>& ev, const EngineConfig& cfg,
                              std::uint64_t window_seed, EquivalenceTally& tally) {
  tally.traces++;
  tally.events += ev.size();
  auto note = [&](const std::string& what) {
    if (tally.firstMismatch.empty()) tally.firstMismatch = what;
  };
  ContextEngine engine(cfg);
  std::vector<ScenarioTrigger> streamed;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    auto t = engine.ingest(ev[i]);
    streamed.insert(streamed.end(), t.begin(), t.end());
    const Signals want = reference::signals_at(ev, i, cfg);
    if (!(engine.signals() == want)) {
      tally.signalMismatches++;
      std::ostringstream os;
      os << "event " << i << "\n  streaming: " << engine.signals() << "\n  reference: " << want;
      note(os.str());
    }
  }
  tally.triggers += streamed.size();
  if (streamed != reference::evaluate(ev, cfg)) {
    tally.triggerMismatches++;
    note("trigger sequences differ");
  }
  if (ev.empty()) return;

  std::mt19937_64 rng(window_seed);
  const std::int64_t lo = ev.front().timestamp, hi = ev.back().timestamp;
  std::uniform_int_distribution<std::int64_t> pick(lo - kHourMs, hi + kHourMs);
  for (int k = 0; k < 8; ++k) {
    std::int64_t a = pick(rng), b = pick(rng);
    if (a > b) std::swap(a, b);
    for (std::size_t c = 0; c < kAppCategoryCount; ++c) {
      const auto cat = static_cast<AppCategory>(c);
      if (engine.window_usage(cat, a, b) != reference::window_usage(ev, cat, a, b, cfg)) {
        tally.windowMismatches++;
        note("window_usage differs");
      }
    }
  }
  for (std::size_t l = 0; l < kLocationTypeCount; ++l) {
    const auto label = static_cast<LocationType>(l);
    if (engine.dwell(label) != reference::dwell(ev, label)) {
      tally.dwellMismatches++;
      note("dwell differs");
    }
  }
  const LocalClock clock(cfg.tzOffsetMinutes);
  for (LocalDate d = clock.date(lo) - 1; d <= clock.date(hi) + 1; ++d) {
    if (!(engine.daily_summary(d) == reference::daily_summary(ev, d, cfg))) {
      tally.summaryMismatches++;
      note("daily summary differs");
    }
  }
  std::map<ScenarioId, std::string> last_key;
  for (const auto& t : streamed) {
    if (last_key[t.scenarioId] == t.cooldownKey) tally.cooldownRepeats++;
    last_key[t.scenarioId] = t.cooldownKey;
  }
}

/// The randomized corpus: half irregular soup under the default rules,
/// half phase-structured traces under the scaled rules.
inline EquivalenceTally run_equivalence_corpus(std::size_t traces) {
  EquivalenceTally tally;
  EngineConfig plain;
  EngineConfig scaled;
  scaled.rules = scaled_rules();
  for (std::size_t i = 0; i < traces; ++i) {
    if (i % 2 == 0) {
      check_equivalence(soup_trace(i), plain, i, tally);
    } else {
      check_equivalence(regime_trace(i), scaled, i, tally);
    }
  }
  return tally;
}

}  // namespace contexta::testing
