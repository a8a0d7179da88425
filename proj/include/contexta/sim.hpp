#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contexta/clock.hpp"
#include "contexta/scenario.hpp"
#include "contexta/trace.hpp"

namespace contexta {

/// One block of simulated behaviour. `scenario` empty means background.
/// Times are minutes from local midnight of the script's day and may run
/// past 1440 into the next day.
struct Segment {
  std::optional<ScenarioId> scenario;
  std::int64_t start = 0;
  std::int64_t duration = 0;
  std::map<std::string, std::string> params;
};

struct ScenarioScript {
  std::uint64_t seed = 0;
  LocalDate day = 0;
  int tzOffsetMinutes = kDefaultTzOffsetMinutes;
  std::string userId = "sim-user";
  std::vector<Segment> segments;
  // background padding around the segment hull, minutes
  std::int64_t padBefore = 30;
  std::int64_t padAfter = 20;
};

/// Script file (JSON):
///   {"seed":42,"day":"2023-11-15","tzOffsetMinutes":480,"userId":"demo",
///    "padBefore":30,"padAfter":20,
///    "segments":[{"scenario":"excessive_app_usage","start":30,"duration":150,
///                 "params":{"package":"com.sina.weibo"}}]}
/// `scenario` may be "background". Throws InvalidScript.
ScenarioScript parse_script(std::string_view json);
ScenarioScript load_script_file(const std::string& path);
std::string serialize_script(const ScenarioScript& s);

/// Throws InvalidScript on overlapping segments, non-positive durations or
/// a scenario segment that cannot produce its labelled trigger (too short,
/// outside the scenario's time window).
void validate_script(const ScenarioScript& s);

TraceHeader script_header(const ScenarioScript& s);

/// One label per scenario segment, plus a nighttime_summary label for every
/// 23:30 the trace covers when the script has at least one scenario segment
/// and no explicit nighttime_summary segment covers that evening.
std::vector<GroundTruthLabel> script_labels(const ScenarioScript& s);

using EventSinkFn = std::function<void(const SensorEvent&)>;

/// Streams the events of `s` in timestamp order. Deterministic in (s, seed).
void generate(const ScenarioScript& s, const EventSinkFn& sink);
Trace generate(const ScenarioScript& s);
/// Writes the trace file (header, events, labels) without materializing it.
void generate_to(const ScenarioScript& s, std::ostream& out);

/// Single-scenario script used by the evaluation corpus: the scenario's
/// canonical segment, shifted by seed % 5 minutes.
ScenarioScript corpus_script(ScenarioId id, std::uint64_t seed, std::string_view day = "2023-11-15");
/// One local day containing a segment for every scenario.
ScenarioScript full_day_script(std::uint64_t seed, std::string_view day = "2023-11-15");
/// Background only, `hours` long from local midnight.
ScenarioScript background_script(std::uint64_t seed, std::int64_t hours = 24,
                                 std::string_view day = "2023-11-15");

/// Reference coordinates used by the simulator.
namespace places {
inline constexpr double kHomeLat = 31.2304;
inline constexpr double kHomeLon = 121.4737;
inline constexpr double kWorkLat = 31.2304;
inline constexpr double kWorkLon = 121.5052;   // ~3 km east
inline constexpr double kRestaurantLat = 31.2394;  // ~1 km north
inline constexpr double kRestaurantLon = 121.4737;
}  // namespace places

}  // namespace contexta
