#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contexta/scenario.hpp"
#include "contexta/signals.hpp"
#include "contexta/trigger.hpp"

namespace contexta {

/// Tunable rule parameters. Defaults are the documented rule catalog.
struct RuleConfig {
  std::int64_t walkingWindowMs = 15 * kMinuteMs;
  std::int64_t walkingThresholdMs = 10 * kMinuteMs;
  std::int64_t runningWindowMs = 10 * kMinuteMs;
  std::int64_t runningThresholdMs = 5 * kMinuteMs;
  std::int64_t intenseRunningBoutMs = 20 * kMinuteMs;
  std::int64_t intenseVigorousMs = 5 * kMinuteMs;
  std::int64_t sittingStillMs = 90 * kMinuteMs;
  std::int64_t sittingMaxScreenGapMs = 30 * kMinuteMs;
  std::int64_t napScreenOffMs = 30 * kMinuteMs;
  double napMaxLux = 50.0;
  std::int64_t wakeMinSleepMs = 5 * kHourMs;
  int insomniaEpisodes = 3;
  std::int64_t insomniaMinGapMs = 10 * kMinuteMs;
  std::int64_t mealDwellMs = 15 * kMinuteMs;
  std::int64_t summaryTimeOfDay = hm(23, 30);
  std::int64_t workplaceDwellMs = 10 * kMinuteMs;
  std::int64_t offWorkPresenceMs = 4 * kHourMs;
  std::int64_t offWorkEarliest = hm(16);
  std::int64_t travelDwellMs = 30 * kMinuteMs;
  double travelMinKm = 5.0;
  std::int64_t excessiveUsageMs = 120 * kMinuteMs;
  std::int64_t musicMs = 10 * kMinuteMs;
  std::int64_t storyTimeOfDay = hm(21);
  std::int64_t storyScreenLookbackMs = 10 * kMinuteMs;
  std::int64_t storyWindowMs = 30 * kMinuteMs;
  std::int64_t bingeMs = 60 * kMinuteMs;
};

struct MealWindow {
  std::int64_t start;
  std::int64_t end;
};
inline constexpr std::array<MealWindow, 3> kMealWindows = {
    MealWindow{hm(6, 30), hm(9)}, MealWindow{hm(11), hm(13, 30)}, MealWindow{hm(17), hm(20)}};

/// Evaluates the sixteen scenario predicates against one Signals snapshot,
/// tracking each predicate's previous value and the cooldown registry.
/// A trigger is emitted on a false->true transition whose cooldown allows it.
class RuleBook {
 public:
  using SummaryFn = std::function<DailySummary(LocalDate)>;

  explicit RuleBook(RuleConfig cfg = {}) : cfg_(cfg) {}

  /// Triggers in catalog order. `summary` is consulted only when the
  /// nighttime summary fires.
  std::vector<ScenarioTrigger> evaluate(const Signals& s, const SummaryFn& summary);

  const RuleConfig& config() const { return cfg_; }
  /// Raw predicate for scenario `id` (no transition or cooldown logic).
  bool predicate(ScenarioId id, const Signals& s) const;

  const std::map<std::string, std::int64_t>& cooldowns() const { return cooldowns_; }

 private:
  std::optional<ScenarioTrigger> fire(ScenarioId id, const Signals& s, const SummaryFn& summary);

  RuleConfig cfg_;
  std::array<bool, kScenarioCount> last_{};
  std::array<std::optional<std::int64_t>, kScenarioCount> lastFired_{};
  std::map<std::string, std::int64_t> cooldowns_;
};

/// Metrics rendering of a daily summary (keys of the nighttime_summary rule).
std::map<std::string, double> summary_metrics(const DailySummary& d);

int meal_window_index(std::int64_t time_of_day);

}  // namespace contexta
