#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "contexta/app_categories.hpp"
#include "contexta/rules.hpp"
#include "contexta/sensor.hpp"
#include "contexta/signals.hpp"
#include "contexta/trigger.hpp"

namespace contexta {

class TriggerBus;

struct EngineConfig {
  int tzOffsetMinutes = 480;
  RuleConfig rules;
  const AppCategoryMap* categories = nullptr;  // defaults() when null
  std::int64_t usageRetentionMs = 48 * kHourMs;
};

namespace detail {

/// Splits [a, b) at local midnights and adds each piece to `per_date`.
void add_by_date(std::map<LocalDate, std::int64_t>& per_date, const LocalClock& clock,
                 std::int64_t a, std::int64_t b);
/// Overlap of [a, b) with local date `d`.
std::int64_t overlap_with_date(const LocalClock& clock, LocalDate d, std::int64_t a, std::int64_t b);

struct ActivityTracker {
  struct Reading {
    std::int64_t t;
    ActivityKind kind;
  };
  std::deque<Reading> recent;  // covers the longest trailing window
  std::int64_t chainStart = 0;
  std::array<std::map<LocalDate, std::int64_t>, kActivityKindCount> perDate;
};

struct VigorousTracker {
  bool open = false;
  std::int64_t second = 0;
  double sumSq = 0.0;
  std::int64_t count = 0;
  std::int64_t streak = 0;
  std::int64_t streakEnd = 0;
};

struct ScreenTracker {
  bool known = false;
  bool on = false;
  std::int64_t onStart = 0;
  std::int64_t offStart = 0;
  std::deque<std::pair<std::int64_t, std::int64_t>> closed;  // recent on-intervals
  std::optional<std::pair<std::int64_t, std::int64_t>> lastClosed;
  std::deque<std::int64_t> qualifyingTurnOns;
  std::map<LocalDate, std::int64_t> onPerDate;  // closed intervals only
};

struct LocationTracker {
  bool has = false;
  std::int64_t lastT = 0;
  GeoPoint lastPos;
  int lastLabel = kUnlabeled;
  std::int64_t runStart = 0;
  std::optional<GeoPoint> homeLabeled, workLabeled;
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> nightCells, dayCells;
  std::map<LocalDate, std::int64_t> workPerDate;
  std::map<LocalDate, std::int64_t> firstWorkFix;
  std::vector<LocationSpan> runs;  // closed runs
};

struct UsageTracker {
  struct Record {
    std::int64_t t;
    AppCategory category;
    std::int64_t ms;
  };
  std::deque<Record> retained;
  std::map<LocalDate, std::int64_t> socialPerDate;
  std::map<LocalDate, std::int64_t> claimedPerDate;
  std::map<LocalDate, std::array<std::int64_t, kAppCategoryCount>> claimedByCategory;

  bool fgHas = false;
  bool fgVideo = false;
  std::int64_t fgT = 0;
  std::int64_t videoRunStart = 0;

  bool audioHas = false;
  bool audioActive = false;
  std::int64_t audioT = 0;
  std::int64_t audioRunStart = 0;

  std::optional<double> lightLux;
};

}  // namespace detail

/// Per-user streaming context engine. Owns the behavioural state
/// (UserContextState) and the rule book; feed it events in timestamp order.
/// The engine never reads the wall clock: all time comes from events.
/// Copyable; a copy continues independently from the same state.
class ContextEngine {
 public:
  explicit ContextEngine(EngineConfig cfg = {});

  /// Ingests one event and returns the triggers it caused, in catalog order.
  /// Throws OutOfOrderEvent when the event precedes the last ingested one.
  std::vector<ScenarioTrigger> ingest(const SensorEvent& e);

  /// Signals computed at the last ingested event.
  const Signals& signals() const { return signals_; }

  /// Usage minutes for `category` from AppUsage records stamped within
  /// [start, end], over retained records.
  double window_usage(AppCategory category, std::int64_t start, std::int64_t end) const;

  /// Continuous minutes at `label` up to the last fix, or nullopt when the
  /// current label differs (or there is no fix).
  std::optional<double> dwell(LocationType label) const;

  /// Aggregates for local date `d` up to the last ingested event.
  DailySummary daily_summary(LocalDate d) const;

  /// Broadcast every emitted trigger to `bus` (not owned; may be null).
  void set_bus(TriggerBus* bus) { bus_ = bus; }

  const LocalClock& clock() const { return clock_; }
  std::optional<std::int64_t> last_timestamp() const {
    return started_ ? std::optional(lastTs_) : std::nullopt;
  }
  std::size_t events_ingested() const { return ingested_; }

 private:
  void on_activity(std::int64_t t, ActivityKind k);
  void on_screen(std::int64_t t, ScreenState st);
  void on_location(std::int64_t t, const Location& loc);
  void on_app_usage(std::int64_t t, const AppUsage& u);
  void finalize_bucket(std::int64_t now_sec);
  void compute_signals(std::int64_t now);
  std::int64_t screen_on_ms(LocalDate d, std::int64_t upto) const;

  EngineConfig cfg_;
  const AppCategoryMap* categories_;
  LocalClock clock_;
  RuleBook rules_;
  TriggerBus* bus_ = nullptr;

  bool started_ = false;
  std::int64_t lastTs_ = 0;
  std::size_t ingested_ = 0;
  bool justTurnedOn_ = false;
  std::int64_t priorOffMs_ = 0;
  bool justLeftWork_ = false;

  detail::ActivityTracker activity_;
  detail::VigorousTracker vigorous_;
  detail::ScreenTracker screen_;
  detail::LocationTracker location_;
  detail::UsageTracker usage_;
  Signals signals_;
};

/// Runs a fresh engine over a whole event sequence.
std::vector<ScenarioTrigger> run_engine(std::span<const SensorEvent> events,
                                        const EngineConfig& cfg = {});

}  // namespace contexta
