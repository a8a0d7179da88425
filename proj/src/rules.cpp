#include "contexta/rules.hpp"

#include <algorithm>

namespace contexta {

namespace {

double minutes(std::int64_t ms) { return static_cast<double>(ms) / kMinuteMs; }

bool in_window(std::int64_t tod, std::int64_t start, std::int64_t end) {
  return tod >= start && tod < end;
}

constexpr std::array<std::string_view, 3> kMealNames = {"breakfast", "lunch", "dinner"};

}  // namespace

int meal_window_index(std::int64_t tod) {
  for (std::size_t i = 0; i < kMealWindows.size(); ++i) {
    if (in_window(tod, kMealWindows[i].start, kMealWindows[i].end)) return static_cast<int>(i);
  }
  return -1;
}

std::map<std::string, double> summary_metrics(const DailySummary& d) {
  std::map<std::string, double> m;
  m["screenOnMinutes"] = minutes(d.screenOnMs);
  for (std::size_t c = 0; c < kAppCategoryCount; ++c) {
    m["usageMinutes." + std::string(to_string(static_cast<AppCategory>(c)))] =
        minutes(d.usageMs[c]);
  }
  for (std::size_t a = 0; a < kActivityKindCount; ++a) {
    m["activityMinutes." + std::string(to_string(static_cast<ActivityKind>(a)))] =
        minutes(d.activityMs[a]);
  }
  m["locationSegments"] = static_cast<double>(d.locationTimeline.size());
  return m;
}

bool RuleBook::predicate(ScenarioId id, const Signals& s) const {
  const auto& c = cfg_;
  const std::int64_t tod = s.timeOfDay;
  switch (id) {
    case ScenarioId::Walking:
      return s.walkingMs15 >= c.walkingThresholdMs;
    case ScenarioId::Running:
      return s.runningMs10 >= c.runningThresholdMs;
    case ScenarioId::IntenseExercise:
      return s.runningBoutMs >= c.intenseRunningBoutMs || s.vigorousStreakMs >= c.intenseVigorousMs;
    case ScenarioId::ProlongedSitting:
      return s.activity == ActivityKind::Still && s.stillStreakMs >= c.sittingStillMs &&
             s.longestOffGap90Ms < c.sittingMaxScreenGapMs && s.locationFresh &&
             s.dwellMs >= c.sittingStillMs;
    case ScenarioId::Nap:
      return in_window(tod, hm(12), hm(16)) && s.screenKnown && !s.screenOn &&
             s.screenOffMs >= c.napScreenOffMs && s.activity == ActivityKind::Still &&
             s.lightLux && *s.lightLux < c.napMaxLux;
    case ScenarioId::WakeUp:
      return s.justTurnedOn && s.priorOffMs >= c.wakeMinSleepMs && in_window(tod, hm(5), hm(11));
    case ScenarioId::Insomnia:
      return in_window(tod, hm(1), hm(5)) && s.insomniaEpisodes >= c.insomniaEpisodes;
    case ScenarioId::MealPattern:
      return meal_window_index(tod) >= 0 && s.locationFresh &&
             s.locationLabel == LocationType::Restaurant && s.dwellMs >= c.mealDwellMs;
    case ScenarioId::NighttimeSummary:
      return tod >= c.summaryTimeOfDay;
    case ScenarioId::WorkplaceArrival:
      return in_window(tod, hm(6), hm(12)) && s.locationFresh &&
             s.locationLabel == LocationType::Work && s.dwellMs >= c.workplaceDwellMs;
    case ScenarioId::OffWork:
      return s.justLeftWork && tod >= c.offWorkEarliest && s.workPresenceTodayMs >= c.offWorkPresenceMs;
    case ScenarioId::TravelRecommendation: {
      if (!s.locationFresh || !s.lastFix || s.dwellMs < c.travelDwellMs) return false;
      if (s.locationLabel == LocationType::Home || s.locationLabel == LocationType::Work) return false;
      if (!s.homeAnchor && !s.workAnchor) return false;
      if (s.homeAnchor && haversine_km(*s.lastFix, *s.homeAnchor) <= c.travelMinKm) return false;
      if (s.workAnchor && haversine_km(*s.lastFix, *s.workAnchor) <= c.travelMinKm) return false;
      return true;
    }
    case ScenarioId::ExcessiveAppUsage:
      return in_window(tod, 0, hm(6)) && s.socialTonightMs >= c.excessiveUsageMs &&
             s.locationFresh && s.locationLabel == LocationType::Home && s.screenOn;
    case ScenarioId::MusicPlayback:
      return s.audioFresh && s.audioActive && s.audioRunMs >= c.musicMs;
    case ScenarioId::StoryReminder:
      return in_window(tod, c.storyTimeOfDay, c.storyTimeOfDay + c.storyWindowMs) &&
             s.screenOnWithin10;
    case ScenarioId::LateNightBinge: {
      if (!(tod >= hm(23) || tod < hm(4)) || !s.videoRunActive) return false;
      // 23:00 of the evening this night belongs to.
      const std::int64_t window_start = s.now - (tod >= hm(23) ? tod - hm(23) : tod + hm(1));
      return s.now - std::max(s.videoRunStart, window_start) >= c.bingeMs;
    }
  }
  return false;
}

std::optional<ScenarioTrigger> RuleBook::fire(ScenarioId id, const Signals& s,
                                              const SummaryFn& summary) {
  const auto& info = scenario_info(id);
  const auto idx = static_cast<std::size_t>(id);
  std::string key(info.name);
  switch (info.cooldown) {
    case CooldownKind::Duration:
      if (lastFired_[idx] && s.now - *lastFired_[idx] < info.cooldownMs) return std::nullopt;
      key += "/" + format_date(s.date) + "T" + format_time_of_day(s.timeOfDay);
      break;
    case CooldownKind::PerDay:
      key += "/" + format_date(s.date);
      break;
    case CooldownKind::PerNight:
      key += "/night-" + format_date(s.night);
      break;
    case CooldownKind::PerMeal:
      key += "/" + format_date(s.date) + "/" +
             std::string(kMealNames.at(static_cast<std::size_t>(meal_window_index(s.timeOfDay))));
      break;
  }
  if (info.cooldown != CooldownKind::Duration && cooldowns_.count(key)) return std::nullopt;

  const std::int64_t tod_start = s.now - s.timeOfDay;  // local midnight today
  ScenarioTrigger t;
  t.scenarioId = id;
  t.firedAt = s.now;
  t.windowEnd = s.now;
  auto& m = t.metrics;
  switch (id) {
    case ScenarioId::Walking:
      t.windowStart = s.now - cfg_.walkingWindowMs;
      m["walkingMinutes"] = minutes(s.walkingMs15);
      break;
    case ScenarioId::Running:
      t.windowStart = s.now - cfg_.runningWindowMs;
      m["runningMinutes"] = minutes(s.runningMs10);
      break;
    case ScenarioId::IntenseExercise:
      t.windowStart = s.now - std::max(s.runningBoutMs, s.vigorousStreakMs);
      m["runningBoutMinutes"] = minutes(s.runningBoutMs);
      m["vigorousMinutes"] = minutes(s.vigorousStreakMs);
      break;
    case ScenarioId::ProlongedSitting:
      t.windowStart = s.now - s.stillStreakMs;
      m["stillMinutes"] = minutes(s.stillStreakMs);
      m["dwellMinutes"] = minutes(s.dwellMs);
      break;
    case ScenarioId::Nap:
      t.windowStart = s.now - s.screenOffMs;
      m["screenOffMinutes"] = minutes(s.screenOffMs);
      m["lightLux"] = *s.lightLux;
      break;
    case ScenarioId::WakeUp:
      t.windowStart = s.now - s.priorOffMs;
      m["sleepMinutes"] = minutes(s.priorOffMs);
      break;
    case ScenarioId::Insomnia:
      t.windowStart = s.firstInsomniaEpisodeAt;
      m["screenOnEpisodes"] = s.insomniaEpisodes;
      break;
    case ScenarioId::MealPattern:
      t.windowStart = s.dwellStart;
      t.windowEnd = s.lastFixAt;
      m["dwellMinutes"] = minutes(s.dwellMs);
      m["mealWindow"] = meal_window_index(s.timeOfDay);
      break;
    case ScenarioId::NighttimeSummary:
      t.windowStart = tod_start;
      m = summary_metrics(summary(s.date));
      break;
    case ScenarioId::WorkplaceArrival:
      t.windowStart = s.dwellStart;
      t.windowEnd = s.lastFixAt;
      m["dwellMinutes"] = minutes(s.dwellMs);
      break;
    case ScenarioId::OffWork:
      t.windowStart = s.firstWorkFixToday;
      m["workMinutesToday"] = minutes(s.workPresenceTodayMs);
      break;
    case ScenarioId::TravelRecommendation:
      t.windowStart = s.dwellStart;
      t.windowEnd = s.lastFixAt;
      m["dwellMinutes"] = minutes(s.dwellMs);
      m["distanceFromHomeKm"] = s.homeAnchor ? haversine_km(*s.lastFix, *s.homeAnchor) : -1.0;
      m["distanceFromWorkKm"] = s.workAnchor ? haversine_km(*s.lastFix, *s.workAnchor) : -1.0;
      break;
    case ScenarioId::ExcessiveAppUsage:
      t.windowStart = tod_start;
      m["cumulativeUsageMinutes"] = minutes(s.socialTonightMs);
      break;
    case ScenarioId::MusicPlayback:
      t.windowStart = s.audioRunStart;
      t.windowEnd = std::min(s.now, s.audioRunStart + s.audioRunMs);
      m["playbackMinutes"] = minutes(s.audioRunMs);
      break;
    case ScenarioId::StoryReminder:
      t.windowStart = s.now - cfg_.storyScreenLookbackMs;
      m["reminderHour"] = static_cast<double>(cfg_.storyTimeOfDay) / kHourMs;
      break;
    case ScenarioId::LateNightBinge: {
      const std::int64_t tod = s.timeOfDay;
      const std::int64_t window_start = s.now - (tod >= hm(23) ? tod - hm(23) : tod + hm(1));
      t.windowStart = std::max(s.videoRunStart, window_start);
      m["videoMinutes"] = minutes(s.now - t.windowStart);
      break;
    }
  }
  t.cooldownKey = key;
  lastFired_[idx] = s.now;
  cooldowns_[key] = s.now;
  return t;
}

std::vector<ScenarioTrigger> RuleBook::evaluate(const Signals& s, const SummaryFn& summary) {
  std::vector<ScenarioTrigger> out;
  for (std::size_t i = 0; i < kScenarioCount; ++i) {
    const auto id = static_cast<ScenarioId>(i);
    const bool now_true = predicate(id, s);
    const bool was_true = last_[i];
    last_[i] = now_true;
    if (now_true && !was_true) {
      if (auto t = fire(id, s, summary)) out.push_back(std::move(*t));
    }
  }
  return out;
}

}  // namespace contexta
