#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "contexta/app_categories.hpp"
#include "contexta/clock.hpp"
#include "contexta/sensor.hpp"

namespace contexta {

// Stream semantics shared by the streaming engine and any reference
// evaluator. All durations are integer milliseconds.
//
// Activity: an Activity event at t holds its kind over [t, min(next, t+hold)).
// Screen: ScreenStatus events are levels; on and unlocked both count as on.
//   An "episode" is an on-interval; it ends at the next off event.
// Location: consecutive fixes with the same label (unlabeled is its own
//   label) and gaps <= kLocationGapMs form a dwell run.
// Audio: consecutive isActive=true events with gaps <= kAudioGapMs form a run.
// Foreground: consecutive video-category ForegroundApp events with gaps
//   <= kForegroundGapMs form a run.
// Accelerometer: samples are bucketed per epoch second; a completed bucket is
//   vigorous when the RMS of |‖a‖ - g| exceeds kVigorousRms.
inline constexpr std::int64_t kActivityHoldMs = 3 * kMinuteMs;
inline constexpr std::int64_t kLocationGapMs = 15 * kSecondMs;
inline constexpr std::int64_t kAudioGapMs = 15 * kSecondMs;
inline constexpr std::int64_t kForegroundGapMs = 90 * kSecondMs;
inline constexpr double kGravity = 9.80665;
inline constexpr double kVigorousRms = 8.0;
inline constexpr double kAnchorCellDegrees = 0.005;

struct GeoPoint {
  double lat{};
  double lon{};
  bool operator==(const GeoPoint&) const = default;
};

double haversine_km(GeoPoint a, GeoPoint b);

/// Location label key: LocationType index, or kUnlabeled.
inline constexpr int kUnlabeled = -1;
inline int label_key(const std::optional<LocationType>& t) {
  return t ? static_cast<int>(*t) : kUnlabeled;
}

/// Everything the rule book needs at one evaluation instant (an ingested
/// event). Produced by the streaming engine and, independently, by the
/// brute-force reference used in tests; the two must agree exactly.
struct Signals {
  std::int64_t now{};
  LocalDate date{};
  std::int64_t timeOfDay{};
  LocalDate night{};

  // activity
  std::optional<ActivityKind> activity;  // unset once the last reading expired
  std::int64_t walkingMs15{};            // walking time in [now-15m, now]
  std::int64_t runningMs10{};            // running time in [now-10m, now]
  std::int64_t runningBoutMs{};
  std::int64_t stillStreakMs{};
  std::int64_t vigorousStreakMs{};

  // screen
  bool screenKnown{};
  bool screenOn{};
  std::int64_t screenOffMs{};       // continuous off time; 0 while on
  bool justTurnedOn{};              // this event is an off->on transition
  std::int64_t priorOffMs{};        // off duration ended by that transition
  std::int64_t longestOffGap90Ms{}; // longest span in [now-90m, now] without screen on
  int insomniaEpisodes{};           // qualifying turn-ons since 01:00 today (01:00-05:00 only)
  std::int64_t firstInsomniaEpisodeAt{};
  bool screenOnWithin10{};

  std::optional<double> lightLux;

  // location
  bool hasFix{};
  std::optional<LocationType> locationLabel;
  bool locationFresh{};  // now - last fix <= kLocationGapMs
  std::int64_t dwellStart{};
  std::int64_t lastFixAt{};
  std::int64_t dwellMs{};
  bool justLeftWork{};
  std::int64_t workPresenceTodayMs{};
  std::int64_t firstWorkFixToday{};
  std::optional<GeoPoint> homeAnchor;
  std::optional<GeoPoint> workAnchor;
  std::optional<GeoPoint> lastFix;

  // app usage / media
  std::int64_t socialTonightMs{};  // social usage since local midnight, 00:00-06:00 only
  bool videoRunActive{};
  std::int64_t videoRunStart{};
  bool audioFresh{};
  bool audioActive{};
  std::int64_t audioRunStart{};
  std::int64_t audioRunMs{};

  bool operator==(const Signals&) const = default;
};

std::ostream& operator<<(std::ostream& os, const Signals& s);

struct LocationSpan {
  std::optional<LocationType> label;
  std::int64_t start{};
  std::int64_t end{};
  bool operator==(const LocationSpan&) const = default;
};

/// Per-local-date aggregates.
struct DailySummary {
  LocalDate date{};
  std::int64_t screenOnMs{};
  /// Usage attributed to screen-on time: each AppUsage record claims at most
  /// the day's not-yet-claimed screen-on time, so the per-category total can
  /// never exceed screenOnMs.
  std::array<std::int64_t, kAppCategoryCount> usageMs{};
  std::array<std::int64_t, kActivityKindCount> activityMs{};
  std::vector<LocationSpan> locationTimeline;

  bool operator==(const DailySummary&) const = default;
};

}  // namespace contexta
