#include "contexta/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "contexta/error.hpp"
#include "contexta/json_line.hpp"
#include "contexta/rules.hpp"
#include "contexta/signals.hpp"
#include "json.hpp"

namespace contexta {

namespace {

using nlohmann::json;

constexpr std::int64_t kMinutesPerDay = 1440;

std::int64_t tod_min(std::int64_t m) { return floor_mod(m, kMinutesPerDay); }

std::string segment_name(const Segment& s, std::size_t i) {
  return "segment " + std::to_string(i + 1) + " (" +
         (s.scenario ? std::string(to_string(*s.scenario)) : std::string("background")) + ")";
}

// ---- randomness -----------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// std::mt19937_64 is specified bit-for-bit; the std distributions are not,
// so uniform and normal draws are done here.
class Stream {
 public:
  Stream(std::uint64_t seed, Channel ch)
      : eng_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ch) + 1))) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

// ---- apps -----------------------------------------------------------------

struct App {
  const char* package;
  const char* name;
};

constexpr App kNotes{"com.example.notes", "Notes"};
constexpr App kLauncher{"com.android.launcher", "Launcher"};
constexpr App kStory{"com.example.storytime", "Storytime"};

std::string app_name(const std::string& package) {
  static const std::map<std::string, std::string, std::less<>> names = {
      {"com.sina.weibo", "Weibo"},
      {"com.ss.android.ugc.aweme", "Douyin"},
      {"com.zhiliaoapp.musically", "TikTok"},
      {"com.tencent.mm", "WeChat"},
      {"com.xingin.xhs", "Xiaohongshu"},
      {"tv.danmaku.bili", "Bilibili"},
      {"com.netflix.mediaclient", "Netflix"},
      {"com.google.android.youtube", "YouTube"},
      {"com.youku.phone", "Youku"},
      {"com.example.notes", "Notes"},
      {"com.android.launcher", "Launcher"},
      {"com.example.storytime", "Storytime"},
  };
  auto it = names.find(package);
  return it == names.end() ? package : it->second;
}

std::string param(const Segment& s, const std::string& key, const std::string& fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}

double param_number(const Segment& s, const std::string& key, double fallback) {
  auto it = s.params.find(key);
  if (it == s.params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw InvalidScript("parameter '" + key + "' is not a number: " + it->second);
  }
}

// ---- per-second behaviour -------------------------------------------------

enum class Motion : std::uint8_t { Still, Walk, Run, Cycle, Vigorous };
enum class Place : std::uint8_t { Home, Work, Restaurant, Away };

struct SecondState {
  ActivityKind activity = ActivityKind::Still;
  Motion motion = Motion::Still;
  bool screenOn = false;
  Place place = Place::Home;
  std::string fgPackage;
  bool audioActive = false;
  bool headphones = false;
  double lux = 0.0;
};

struct ActiveSegment {
  const Segment* seg;
  std::int64_t startSec;  // epoch seconds
  std::int64_t endSec;
  std::string package;    // resolved app for usage scenarios
  double awayLat = 0.0;
};

void background(std::int64_t minute_of_day, SecondState& st) {
  const std::int64_t m = minute_of_day;
  st.activity = (m % 20) < 2 ? ActivityKind::Walking : ActivityKind::Still;
  const bool quiet = m >= 20 * 60 + 30 && m < 21 * 60 + 30;
  st.screenOn = !quiet && m % 8 == 0;
  st.place = Place::Home;
  st.audioActive = false;
  st.headphones = false;
  if (m >= 7 * 60 && m < 19 * 60) {
    st.lux = 300.0;
  } else if (m >= 19 * 60 && m < 23 * 60) {
    st.lux = 120.0;
  } else {
    st.lux = 5.0;
  }
}

void apply_segment(const ActiveSegment& a, std::int64_t sec, SecondState& st) {
  const std::int64_t rel = sec - a.startSec;
  const std::int64_t len = a.endSec - a.startSec;
  switch (*a.seg->scenario) {
    case ScenarioId::Walking:
      st.activity = ActivityKind::Walking;
      break;
    case ScenarioId::Running:
      st.activity = ActivityKind::Running;
      break;
    case ScenarioId::IntenseExercise:
      st.activity = ActivityKind::Cycling;
      st.motion = Motion::Vigorous;
      break;
    case ScenarioId::ProlongedSitting:
      st.activity = ActivityKind::Still;
      break;
    case ScenarioId::Nap:
      st.activity = ActivityKind::Still;
      st.screenOn = false;
      st.lux = 10.0;
      break;
    case ScenarioId::WakeUp:
      st.activity = ActivityKind::Still;
      st.screenOn = rel >= len - 5 * 60;
      st.lux = 5.0;
      break;
    case ScenarioId::Insomnia:
      // 15 minutes dark, 2 minutes on, repeating
      st.screenOn = rel % (17 * 60) >= 15 * 60;
      st.lux = 5.0;
      break;
    case ScenarioId::MealPattern:
      st.place = Place::Restaurant;
      break;
    case ScenarioId::NighttimeSummary:
      break;
    case ScenarioId::WorkplaceArrival:
      st.place = Place::Work;
      break;
    case ScenarioId::OffWork:
      st.place = rel < len - 5 * 60 ? Place::Work : Place::Home;
      break;
    case ScenarioId::TravelRecommendation:
      st.place = Place::Away;
      break;
    case ScenarioId::ExcessiveAppUsage:
    case ScenarioId::LateNightBinge:
      st.screenOn = true;
      st.fgPackage = a.package;
      break;
    case ScenarioId::MusicPlayback:
      st.audioActive = true;
      st.headphones = true;
      break;
    case ScenarioId::StoryReminder:
      st.screenOn = true;
      st.fgPackage = kStory.package;
      break;
  }
}

Motion motion_of(ActivityKind k) {
  switch (k) {
    case ActivityKind::Walking: return Motion::Walk;
    case ActivityKind::Running: return Motion::Run;
    case ActivityKind::Cycling: return Motion::Cycle;
    case ActivityKind::Still: return Motion::Still;
  }
  return Motion::Still;
}

struct Wave {
  double hz;
  double amplitude;
};

Wave wave_of(Motion m) {
  switch (m) {
    case Motion::Still: return {0.0, 0.0};
    case Motion::Walk: return {2.0, 2.0};
    case Motion::Run: return {3.0, 6.0};
    case Motion::Cycle: return {1.5, 3.0};
    case Motion::Vigorous: return {2.0, 24.0};
  }
  return {0.0, 0.0};
}

struct Extent {
  std::int64_t startMin;
  std::int64_t endMin;
};

Extent extent(const ScenarioScript& s) {
  if (s.segments.empty()) throw InvalidScript("script has no segments");
  std::int64_t lo = s.segments.front().start;
  std::int64_t hi = s.segments.front().start + s.segments.front().duration;
  for (const auto& seg : s.segments) {
    lo = std::min(lo, seg.start);
    hi = std::max(hi, seg.start + seg.duration);
  }
  return {lo - s.padBefore, hi + s.padAfter};
}

std::int64_t minute_ms(const ScenarioScript& s, std::int64_t minutes) {
  return LocalClock(s.tzOffsetMinutes).midnight(s.day) + minutes * kMinuteMs;
}

bool has_scenarios(const ScenarioScript& s) {
  return std::any_of(s.segments.begin(), s.segments.end(),
                     [](const Segment& g) { return g.scenario.has_value(); });
}

// Scenario-specific timing requirements so that each segment produces its
// labelled trigger. Returns an empty string when satisfied.
std::string timing_problem(const Segment& g) {
  const std::int64_t s = g.start;
  const std::int64_t d = g.duration;
  const std::int64_t ts = tod_min(s);
  auto need = [&](bool ok, const std::string& what) { return ok ? std::string() : what; };
  switch (*g.scenario) {
    case ScenarioId::Walking:
      return need(d >= 11, "needs at least 11 minutes");
    case ScenarioId::Running:
    case ScenarioId::IntenseExercise:
      return need(d >= 6, "needs at least 6 minutes");
    case ScenarioId::ProlongedSitting:
      return need(d >= 91, "needs at least 91 minutes");
    case ScenarioId::Nap:
      return need(d >= 31 && ts >= 12 * 60 && ts + 31 <= 16 * 60,
                  "needs at least 31 minutes inside 12:00-16:00");
    case ScenarioId::WakeUp: {
      const std::int64_t on = tod_min(s + d - 5);
      return need(d >= 306 && on >= 5 * 60 && on < 11 * 60,
                  "needs at least 306 minutes and a wake time in 05:00-11:00");
    }
    case ScenarioId::Insomnia:
      return need(d >= 52 && ts >= 60 && ts + 51 < 5 * 60,
                  "needs at least 52 minutes starting in 01:00-04:09");
    case ScenarioId::MealPattern:
      return need(d >= 16 && meal_window_index(hm(0, static_cast<int>(tod_min(s + 15)))) >= 0 &&
                      meal_window_index(hm(0, static_cast<int>(ts))) ==
                          meal_window_index(hm(0, static_cast<int>(tod_min(s + 15)))),
                  "needs at least 16 minutes with its first 15 inside one meal window");
    case ScenarioId::NighttimeSummary:
      return need(ts <= 23 * 60 + 30 && ts + d > 23 * 60 + 30, "must cover 23:30");
    case ScenarioId::WorkplaceArrival:
      return need(d >= 11 && ts >= 6 * 60 && ts + 10 < 12 * 60,
                  "needs at least 11 minutes starting in 06:00-11:49");
    case ScenarioId::OffWork: {
      const std::int64_t leave = ts + d - 5;
      return need(d >= 246 && leave >= 16 * 60 && leave < kMinutesPerDay,
                  "needs at least 246 minutes and a departure in 16:00-24:00 the same day");
    }
    case ScenarioId::TravelRecommendation:
      return need(d >= 31, "needs at least 31 minutes");
    case ScenarioId::ExcessiveAppUsage:
      return need(d >= 121 && ts + 121 <= 6 * 60,
                  "needs at least 121 minutes of usage before 06:00");
    case ScenarioId::MusicPlayback:
      return need(d >= 11, "needs at least 11 minutes");
    case ScenarioId::StoryReminder:
      return need(ts <= 21 * 60 && ts + d > 21 * 60, "must cover 21:00");
    case ScenarioId::LateNightBinge:
      return need(d >= 61 && (ts >= 23 * 60 || ts < 3 * 60),
                  "needs at least 61 minutes starting in 23:00-02:59");
  }
  return {};
}

}  // namespace

// ---- script I/O -----------------------------------------------------------

ScenarioScript parse_script(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidScript(std::string("script is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidScript("script must be a JSON object");
  ScenarioScript s;
  try {
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (!j.contains("day")) throw InvalidScript("script needs a \"day\"");
    s.day = parse_date(j.at("day").get<std::string>());
    if (j.contains("tzOffsetMinutes")) s.tzOffsetMinutes = j.at("tzOffsetMinutes").get<int>();
    if (j.contains("userId")) s.userId = j.at("userId").get<std::string>();
    if (j.contains("padBefore")) s.padBefore = j.at("padBefore").get<std::int64_t>();
    if (j.contains("padAfter")) s.padAfter = j.at("padAfter").get<std::int64_t>();
    if (!j.contains("segments") || !j.at("segments").is_array()) {
      throw InvalidScript("script needs a \"segments\" array");
    }
    for (const auto& js : j.at("segments")) {
      Segment g;
      const auto name = js.at("scenario").get<std::string>();
      if (name != "background") {
        g.scenario = scenario_from_string(name);
        if (!g.scenario) {
          throw InvalidScript("unknown scenarioId '" + name + "' in segment " +
                              std::to_string(s.segments.size() + 1));
        }
      }
      g.start = js.at("start").get<std::int64_t>();
      g.duration = js.at("duration").get<std::int64_t>();
      if (js.contains("params")) {
        for (const auto& [k, v] : js.at("params").items()) {
          g.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
      }
      s.segments.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw InvalidScript(std::string("bad script field: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InvalidScript(e.what());
  }
  return s;
}

ScenarioScript load_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidScript("cannot open script " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

std::string serialize_script(const ScenarioScript& s) {
  std::string segs = "[";
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const auto& g = s.segments[i];
    JsonLine l;
    l.field("scenario", g.scenario ? std::string(to_string(*g.scenario)) : "background");
    l.field("start", g.start).field("duration", g.duration);
    if (!g.params.empty()) {
      JsonLine p;
      for (const auto& [k, v] : g.params) p.field(k, v);
      l.raw("params", p.str());
    }
    if (i) segs += ',';
    segs += l.str();
  }
  segs += ']';
  JsonLine out;
  out.raw("seed", std::to_string(s.seed))
      .field("day", format_date(s.day))
      .field("tzOffsetMinutes", s.tzOffsetMinutes)
      .field("userId", s.userId)
      .field("padBefore", s.padBefore)
      .field("padAfter", s.padAfter)
      .raw("segments", segs);
  return out.str();
}

void validate_script(const ScenarioScript& s) {
  if (s.segments.empty()) throw InvalidScript("script has no segments");
  if (s.padBefore < 0 || s.padAfter < 0) throw InvalidScript("padding must be non-negative");
  std::vector<std::size_t> order(s.segments.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    if (s.segments[i].duration <= 0) {
      throw InvalidScript(segment_name(s.segments[i], i) + " has a non-positive duration");
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.segments[a].start < s.segments[b].start;
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& a = s.segments[order[k - 1]];
    const auto& b = s.segments[order[k]];
    if (b.start < a.start + a.duration) {
      const std::size_t i = std::min(order[k - 1], order[k]);
      const std::size_t j = std::max(order[k - 1], order[k]);
      throw InvalidScript(segment_name(s.segments[i], i) + " and " +
                          segment_name(s.segments[j], j) + " overlap");
    }
  }
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const auto& g = s.segments[i];
    if (!g.scenario) continue;
    if (auto why = timing_problem(g); !why.empty()) {
      throw InvalidScript(segment_name(g, i) + " " + why);
    }
    if (*g.scenario == ScenarioId::TravelRecommendation) {
      if (param_number(g, "distanceKm", 20.0) <= 6.0) {
        throw InvalidScript(segment_name(g, i) + " distanceKm must exceed 6");
      }
    }
  }
  const auto ext = extent(s);
  if (minute_ms(s, ext.startMin) <= 0) throw InvalidScript("trace would start before the epoch");
}

TraceHeader script_header(const ScenarioScript& s) {
  const auto ext = extent(s);
  TraceHeader h;
  h.userId = s.userId;
  h.startTime = minute_ms(s, ext.startMin);
  h.endTime = minute_ms(s, ext.endMin);
  h.tzOffsetMinutes = s.tzOffsetMinutes;
  return h;
}

std::vector<GroundTruthLabel> script_labels(const ScenarioScript& s) {
  std::vector<GroundTruthLabel> out;
  if (!has_scenarios(s)) return out;
  std::vector<const Segment*> segs;
  for (const auto& g : s.segments) {
    if (g.scenario) segs.push_back(&g);
  }
  std::stable_sort(segs.begin(), segs.end(),
                   [](const Segment* a, const Segment* b) { return a->start < b->start; });
  for (const Segment* g : segs) {
    out.push_back({*g->scenario, minute_ms(s, g->start), minute_ms(s, g->start + g->duration), 1});
  }

  // The summary fires on its own clock whenever the trace reaches 23:30.
  const TraceHeader h = script_header(s);
  const LocalClock clock(s.tzOffsetMinutes);
  for (LocalDate d = clock.date(h.startTime); d <= clock.date(h.endTime); ++d) {
    const std::int64_t fire = std::max(h.startTime, clock.at(d, hm(23, 30)));
    const std::int64_t stop = std::min(h.endTime, clock.midnight(d + 1));
    if (fire >= stop) continue;
    const bool explicit_label = std::any_of(out.begin(), out.end(), [&](const GroundTruthLabel& l) {
      return l.scenarioId == ScenarioId::NighttimeSummary && l.windowStart <= fire &&
             fire <= l.windowEnd;
    });
    if (!explicit_label) {
      out.push_back({ScenarioId::NighttimeSummary, fire, std::min(stop, fire + kMinuteMs), 1});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GroundTruthLabel& a, const GroundTruthLabel& b) {
    return a.windowStart < b.windowStart;
  });
  return out;
}

// ---- generation -----------------------------------------------------------

void generate(const ScenarioScript& s, const EventSinkFn& sink) {
  validate_script(s);
  const TraceHeader h = script_header(s);
  const LocalClock clock(s.tzOffsetMinutes);

  std::vector<ActiveSegment> active;
  for (const auto& g : s.segments) {
    if (!g.scenario) continue;
    ActiveSegment a{&g, minute_ms(s, g.start) / kSecondMs,
                    minute_ms(s, g.start + g.duration) / kSecondMs, {}, 0.0};
    if (*g.scenario == ScenarioId::ExcessiveAppUsage) a.package = param(g, "package", "com.sina.weibo");
    if (*g.scenario == ScenarioId::LateNightBinge) a.package = param(g, "package", "tv.danmaku.bili");
    if (*g.scenario == ScenarioId::TravelRecommendation) {
      a.awayLat = places::kHomeLat + param_number(g, "distanceKm", 20.0) / 111.195;
    }
    active.push_back(std::move(a));
  }
  std::stable_sort(active.begin(), active.end(),
                   [](const ActiveSegment& a, const ActiveSegment& b) { return a.startSec < b.startSec; });

  Stream accel_rng(s.seed, Channel::Accelerometer);
  Stream gyro_rng(s.seed, Channel::Gyroscope);
  Stream light_rng(s.seed, Channel::Light);
  Stream loc_rng(s.seed, Channel::Location);

  const std::int64_t first_sec = h.startTime / kSecondMs;
  const std::int64_t end_sec = h.endTime / kSecondMs;
  std::size_t next_seg = 0;
  const ActiveSegment* cur = nullptr;

  std::optional<SecondState> prev;
  std::int64_t last_activity_sec = 0;
  std::optional<bool> wifi_prev, bt_prev;
  std::map<std::string, std::int64_t> used;  // seconds per package since last poll

  for (std::int64_t sec = first_sec; sec < end_sec; ++sec) {
    const std::int64_t t0 = sec * kSecondMs;
    if (cur && sec >= cur->endSec) cur = nullptr;
    while (next_seg < active.size() && active[next_seg].startSec <= sec) {
      if (sec < active[next_seg].endSec) cur = &active[next_seg];
      ++next_seg;
    }

    SecondState st;
    background(clock.time_of_day(t0) / kMinuteMs, st);
    if (cur) apply_segment(*cur, sec, st);
    if (st.motion != Motion::Vigorous) st.motion = motion_of(st.activity);
    if (st.fgPackage.empty()) st.fgPackage = st.screenOn ? kNotes.package : kLauncher.package;

    // transitions and heartbeats
    if (!prev || prev->activity != st.activity || sec - last_activity_sec >= 60) {
      sink({t0, ActivityReading{st.activity}});
      last_activity_sec = sec;
    }
    if (!prev || prev->screenOn != st.screenOn) {
      sink({t0, ScreenStatus{st.screenOn ? ScreenState::On : ScreenState::Off}});
    }
    const bool wifi = st.place == Place::Home || st.place == Place::Work;
    if (wifi_prev != wifi) {
      sink({t0, WifiStatus{wifi ? LinkState::Connected : LinkState::Disconnected}});
      wifi_prev = wifi;
    }
    if (bt_prev != st.headphones) {
      sink({t0, BluetoothStatus{st.headphones ? LinkState::Connected : LinkState::Disconnected}});
      bt_prev = st.headphones;
    }

    if (sec % 5 == 0) {
      const double hours = static_cast<double>(t0 - h.startTime) / kHourMs;
      sink({t0, Battery{round_to(std::max(5.0, 95.0 - 3.0 * hours), 10.0)}});
      double lat = places::kHomeLat, lon = places::kHomeLon;
      LocationType label = LocationType::Home;
      switch (st.place) {
        case Place::Home: break;
        case Place::Work:
          lat = places::kWorkLat;
          lon = places::kWorkLon;
          label = LocationType::Work;
          break;
        case Place::Restaurant:
          lat = places::kRestaurantLat;
          lon = places::kRestaurantLon;
          label = LocationType::Restaurant;
          break;
        case Place::Away:
          lat = cur ? cur->awayLat : places::kHomeLat;
          label = LocationType::Other;
          break;
      }
      const double jlat = round_to(lat + 1e-5 * loc_rng.normal(), 1e6);
      const double jlon = round_to(lon + 1e-5 * loc_rng.normal(), 1e6);
      sink({t0, Location{jlat, jlon, label}});
      sink({t0, Audio{st.headphones ? "headphones" : "speaker", st.audioActive}});
    }
    if (sec % 30 == 0) {
      if (used.empty()) {
        sink({t0, AppUsage{app_name(st.fgPackage), st.fgPackage, 0}});
      } else {
        for (const auto& [pkg, secs] : used) sink({t0, AppUsage{app_name(pkg), pkg, secs}});
        used.clear();
      }
      sink({t0, ForegroundApp{st.fgPackage, app_name(st.fgPackage)}});
    }
    if (sec % 60 == 0) {
      BluetoothDevices bt{0, 3};
      if (st.place == Place::Home) bt = {1, 1};
      if (st.place == Place::Work) bt = {3, 6};
      sink({t0, bt});
    }
    if (st.screenOn) used[st.fgPackage]++;

    // 50 Hz motion, 5 Hz light
    const Wave w = wave_of(st.motion);
    for (int k = 0; k < 50; ++k) {
      const std::int64_t t = t0 + k * 20;
      const double phase = 2.0 * std::numbers::pi * w.hz * static_cast<double>(floor_mod(t, 60'000)) / 1000.0;
      const double swing = w.amplitude * std::sin(phase);
      sink({t, Accelerometer{round_to(0.05 * accel_rng.normal(), 1e4),
                             round_to(0.05 * accel_rng.normal(), 1e4),
                             round_to(kGravity + swing + 0.05 * accel_rng.normal(), 1e4)}});
      const double spin = w.amplitude * 0.05 * std::cos(phase);
      sink({t, Gyroscope{round_to(0.01 * gyro_rng.normal() + spin, 1e4),
                         round_to(0.01 * gyro_rng.normal(), 1e4),
                         round_to(0.01 * gyro_rng.normal(), 1e4)}});
      if (k % 10 == 0) {
        sink({t, Light{round_to(std::max(0.0, st.lux * (1.0 + 0.02 * light_rng.normal())), 10.0)}});
      }
    }
    prev = std::move(st);
  }
}

Trace generate(const ScenarioScript& s) {
  Trace tr;
  tr.header = script_header(s);
  generate(s, [&](const SensorEvent& e) { tr.events.push_back(e); });
  tr.labels = script_labels(s);
  return tr;
}

void generate_to(const ScenarioScript& s, std::ostream& out) {
  validate_script(s);
  TraceWriter w(out, script_header(s));
  generate(s, [&](const SensorEvent& e) { w.write(e); });
  for (const auto& l : script_labels(s)) w.write(l);
}

// ---- canned scripts -------------------------------------------------------

namespace {

struct Canon {
  std::int64_t start;
  std::int64_t duration;
};

Canon canonical(ScenarioId id) {
  switch (id) {
    case ScenarioId::Walking: return {9 * 60 + 30, 12};
    case ScenarioId::Running: return {10 * 60, 7};
    case ScenarioId::IntenseExercise: return {10 * 60 + 30, 8};
    case ScenarioId::ProlongedSitting: return {14 * 60, 100};
    case ScenarioId::Nap: return {13 * 60, 45};
    case ScenarioId::WakeUp: return {60, 365};
    case ScenarioId::Insomnia: return {90, 90};
    case ScenarioId::MealPattern: return {12 * 60, 40};
    case ScenarioId::NighttimeSummary: return {23 * 60 + 15, 30};
    case ScenarioId::WorkplaceArrival: return {8 * 60 + 30, 60};
    case ScenarioId::OffWork: return {12 * 60, 305};
    case ScenarioId::TravelRecommendation: return {14 * 60, 45};
    case ScenarioId::ExcessiveAppUsage: return {30, 150};
    case ScenarioId::MusicPlayback: return {15 * 60, 15};
    case ScenarioId::StoryReminder: return {20 * 60 + 50, 20};
    case ScenarioId::LateNightBinge: return {23 * 60 + 10, 80};
  }
  return {0, 0};
}

}  // namespace

ScenarioScript corpus_script(ScenarioId id, std::uint64_t seed, std::string_view day) {
  ScenarioScript s;
  s.seed = seed;
  s.day = parse_date(std::string(day));
  s.userId = "corpus-" + std::string(to_string(id)) + "-" + std::to_string(seed);
  const Canon c = canonical(id);
  s.segments.push_back({id, c.start + static_cast<std::int64_t>(seed % 5), c.duration, {}});
  return s;
}

ScenarioScript full_day_script(std::uint64_t seed, std::string_view day) {
  ScenarioScript s;
  s.seed = seed;
  s.day = parse_date(std::string(day));
  s.userId = "full-day";
  s.padBefore = 0;
  s.padAfter = 0;
  using S = ScenarioId;
  auto add = [&](std::optional<S> id, int h, int m, std::int64_t minutes) {
    s.segments.push_back({id, h * 60 + m, minutes, {}});
  };
  add(S::LateNightBinge, 0, 0, 65);
  add(S::ExcessiveAppUsage, 1, 5, 125);
  add(S::Insomnia, 3, 10, 60);
  add(S::WakeUp, 4, 10, 310);
  add(std::nullopt, 9, 20, 10);
  add(S::WorkplaceArrival, 9, 30, 60);
  add(S::Walking, 10, 35, 12);
  add(S::Running, 11, 0, 7);
  add(S::MealPattern, 11, 15, 40);
  add(S::Nap, 12, 0, 45);
  add(S::IntenseExercise, 12, 50, 8);
  add(S::MusicPlayback, 13, 0, 15);
  add(S::OffWork, 13, 20, 285);
  add(S::ProlongedSitting, 18, 10, 100);
  add(S::TravelRecommendation, 19, 55, 45);
  add(S::StoryReminder, 20, 50, 20);
  add(S::NighttimeSummary, 23, 15, 30);
  add(std::nullopt, 23, 45, 15);
  return s;
}

ScenarioScript background_script(std::uint64_t seed, std::int64_t hours, std::string_view day) {
  ScenarioScript s;
  s.seed = seed;
  s.day = parse_date(std::string(day));
  s.userId = "background";
  s.padBefore = 0;
  s.padAfter = 0;
  s.segments.push_back({std::nullopt, 0, hours * 60, {}});
  return s;
}

}  // namespace contexta
