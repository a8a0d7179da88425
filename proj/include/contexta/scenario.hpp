#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace contexta {

/// The sixteen contextual scenarios, in catalog order. Catalog order is the
/// emission order when several scenarios fire on the same event.
enum class ScenarioId : std::uint8_t {
  Walking,
  Running,
  IntenseExercise,
  ProlongedSitting,
  Nap,
  WakeUp,
  Insomnia,
  MealPattern,
  NighttimeSummary,
  WorkplaceArrival,
  OffWork,
  TravelRecommendation,
  ExcessiveAppUsage,
  MusicPlayback,
  StoryReminder,
  LateNightBinge,
};
inline constexpr std::size_t kScenarioCount = 16;

enum class ScenarioCategory : std::uint8_t {
  ExerciseActivity,
  TimeRoutine,
  LocationEnvironment,
  UsageMedia,
};

enum class CooldownKind : std::uint8_t {
  Duration,    // minimum spacing between firings
  PerDay,      // once per local date
  PerNight,    // once per local night (noon to noon)
  PerMeal,     // once per meal window per local date
};

struct ScenarioInfo {
  ScenarioId id;
  std::string_view name;
  ScenarioCategory category;
  CooldownKind cooldown;
  std::int64_t cooldownMs;  // Duration kind only
  std::vector<std::string_view> metricKeys;
};

const ScenarioInfo& scenario_info(ScenarioId id);
std::string_view to_string(ScenarioId id);
std::string_view to_string(ScenarioCategory c);
/// Human-readable category title, e.g. "Usage Behavior/Media".
std::string_view category_title(ScenarioCategory c);
std::optional<ScenarioId> scenario_from_string(std::string_view s);

std::array<ScenarioId, kScenarioCount> all_scenarios();

}  // namespace contexta
