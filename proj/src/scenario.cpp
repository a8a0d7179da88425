#include "contexta/scenario.hpp"

#include <stdexcept>

#include "contexta/clock.hpp"

namespace contexta {

namespace {

using SC = ScenarioCategory;
using CK = CooldownKind;

const std::array<ScenarioInfo, kScenarioCount>& catalog() {
  static const std::array<ScenarioInfo, kScenarioCount> table = {{
      {ScenarioId::Walking, "walking", SC::ExerciseActivity, CK::Duration, 2 * kHourMs,
       {"walkingMinutes"}},
      {ScenarioId::Running, "running", SC::ExerciseActivity, CK::Duration, 2 * kHourMs,
       {"runningMinutes"}},
      {ScenarioId::IntenseExercise, "intense_exercise", SC::ExerciseActivity, CK::Duration,
       6 * kHourMs, {"runningBoutMinutes", "vigorousMinutes"}},
      {ScenarioId::ProlongedSitting, "prolonged_sitting", SC::ExerciseActivity, CK::Duration,
       90 * kMinuteMs, {"stillMinutes", "dwellMinutes"}},
      {ScenarioId::Nap, "nap", SC::TimeRoutine, CK::PerDay, 0,
       {"screenOffMinutes", "lightLux"}},
      {ScenarioId::WakeUp, "wake_up", SC::TimeRoutine, CK::PerDay, 0, {"sleepMinutes"}},
      {ScenarioId::Insomnia, "insomnia", SC::TimeRoutine, CK::PerNight, 0,
       {"screenOnEpisodes"}},
      {ScenarioId::MealPattern, "meal_pattern", SC::TimeRoutine, CK::PerMeal, 0,
       {"dwellMinutes", "mealWindow"}},
      {ScenarioId::NighttimeSummary, "nighttime_summary", SC::TimeRoutine, CK::PerDay, 0,
       {"screenOnMinutes", "usageMinutes.social", "usageMinutes.video", "usageMinutes.music",
        "usageMinutes.reading", "usageMinutes.productivity", "usageMinutes.other",
        "activityMinutes.walking", "activityMinutes.running", "activityMinutes.cycling",
        "activityMinutes.still", "locationSegments"}},
      {ScenarioId::WorkplaceArrival, "workplace_arrival", SC::LocationEnvironment, CK::PerDay, 0,
       {"dwellMinutes"}},
      {ScenarioId::OffWork, "off_work", SC::LocationEnvironment, CK::PerDay, 0,
       {"workMinutesToday"}},
      {ScenarioId::TravelRecommendation, "travel_recommendation", SC::LocationEnvironment,
       CK::PerDay, 0, {"dwellMinutes", "distanceFromHomeKm", "distanceFromWorkKm"}},
      {ScenarioId::ExcessiveAppUsage, "excessive_app_usage", SC::UsageMedia, CK::PerNight, 0,
       {"cumulativeUsageMinutes"}},
      {ScenarioId::MusicPlayback, "music_playback", SC::UsageMedia, CK::Duration, 2 * kHourMs,
       {"playbackMinutes"}},
      {ScenarioId::StoryReminder, "story_reminder", SC::UsageMedia, CK::PerDay, 0,
       {"reminderHour"}},
      {ScenarioId::LateNightBinge, "late_night_binge", SC::UsageMedia, CK::PerNight, 0,
       {"videoMinutes"}},
  }};
  return table;
}

}  // namespace

const ScenarioInfo& scenario_info(ScenarioId id) {
  return catalog().at(static_cast<std::size_t>(id));
}

std::string_view to_string(ScenarioId id) { return scenario_info(id).name; }

std::string_view to_string(ScenarioCategory c) {
  switch (c) {
    case SC::ExerciseActivity: return "exercise_activity";
    case SC::TimeRoutine: return "time_routine";
    case SC::LocationEnvironment: return "location_environment";
    case SC::UsageMedia: return "usage_media";
  }
  return "?";
}

std::string_view category_title(ScenarioCategory c) {
  switch (c) {
    case SC::ExerciseActivity: return "Exercise/Activity";
    case SC::TimeRoutine: return "Time/Routine";
    case SC::LocationEnvironment: return "Location/Environment";
    case SC::UsageMedia: return "Usage Behavior/Media";
  }
  return "?";
}

std::optional<ScenarioId> scenario_from_string(std::string_view s) {
  for (const auto& info : catalog()) {
    if (info.name == s) return info.id;
  }
  return std::nullopt;
}

std::array<ScenarioId, kScenarioCount> all_scenarios() {
  std::array<ScenarioId, kScenarioCount> out{};
  for (std::size_t i = 0; i < kScenarioCount; ++i) out[i] = static_cast<ScenarioId>(i);
  return out;
}

}  // namespace contexta
