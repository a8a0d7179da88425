#include "reference.hpp"

#include <algorithm>
#include <cmath>

namespace contexta::reference {

namespace {

template <typename T>
const T* as(const SensorEvent& e) {
  return std::get_if<T>(&e.payload);
}

std::int64_t clip(std::int64_t a, std::int64_t b, std::int64_t lo, std::int64_t hi) {
  return std::max<std::int64_t>(0, std::min(b, hi) - std::max(a, lo));
}

struct Interval {
  std::int64_t a, b;
};

// Activity readings as held intervals; the last one is held until
// min(until, t + hold).
std::vector<std::pair<Interval, ActivityKind>> activity_intervals(
    std::span<const SensorEvent> ev, std::int64_t until) {
  std::vector<std::pair<std::int64_t, ActivityKind>> rs;
  for (const auto& e : ev) {
    if (auto* a = as<ActivityReading>(e)) rs.emplace_back(e.timestamp, a->activity);
  }
  std::vector<std::pair<Interval, ActivityKind>> out;
  for (std::size_t j = 0; j < rs.size(); ++j) {
    const std::int64_t cap = rs[j].first + kActivityHoldMs;
    const std::int64_t end = j + 1 < rs.size() ? std::min(rs[j + 1].first, cap) : std::min(until, cap);
    out.push_back({{rs[j].first, end}, rs[j].second});
  }
  return out;
}

struct ScreenHistory {
  bool known = false;
  bool on = false;
  std::int64_t onStart = 0, offStart = 0;
  std::vector<Interval> closed;      // on-intervals with positive length
  std::vector<std::int64_t> turnOns; // off->on transitions
  std::vector<std::int64_t> priorOff;
};

ScreenHistory screen_history(std::span<const SensorEvent> ev) {
  ScreenHistory h;
  for (const auto& e : ev) {
    const auto* s = as<ScreenStatus>(e);
    if (!s) continue;
    const bool on = s->screenStatus != ScreenState::Off;
    if (!h.known) {
      h.known = true;
      h.on = on;
      if (on) {
        h.onStart = e.timestamp;
      } else {
        h.offStart = e.timestamp;
      }
      continue;
    }
    if (h.on == on) continue;
    if (on) {
      h.turnOns.push_back(e.timestamp);
      h.priorOff.push_back(e.timestamp - h.offStart);
      h.onStart = e.timestamp;
    } else {
      if (e.timestamp > h.onStart) h.closed.push_back({h.onStart, e.timestamp});
      h.offStart = e.timestamp;
    }
    h.on = on;
  }
  return h;
}

struct Fix {
  std::int64_t t;
  GeoPoint p;
  int label;
};

std::vector<Fix> fixes(std::span<const SensorEvent> ev) {
  std::vector<Fix> out;
  for (const auto& e : ev) {
    if (auto* l = as<Location>(e)) out.push_back({e.timestamp, {l->lat, l->lon}, label_key(l->locationType)});
  }
  return out;
}

std::size_t run_begin(const std::vector<Fix>& fx, std::size_t last) {
  std::size_t j = last;
  while (j > 0 && fx[j - 1].label == fx[j].label && fx[j].t - fx[j - 1].t <= kLocationGapMs) --j;
  return j;
}

std::optional<GeoPoint> cluster_anchor(const std::vector<Fix>& fx, const LocalClock& clock,
                                       bool night) {
  std::map<std::pair<std::int64_t, std::int64_t>, int> counts;
  for (const auto& f : fx) {
    if (f.label != kUnlabeled) continue;
    const std::int64_t tod = clock.time_of_day(f.t);
    const bool take = night ? tod < hm(6)
                            : (tod >= hm(9) && tod < hm(17) && clock.weekday(f.t) < 5);
    if (!take) continue;
    counts[{static_cast<std::int64_t>(std::floor(f.p.lat / kAnchorCellDegrees)),
            static_cast<std::int64_t>(std::floor(f.p.lon / kAnchorCellDegrees))}]++;
  }
  if (counts.empty()) return std::nullopt;
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return GeoPoint{(static_cast<double>(best->first.first) + 0.5) * kAnchorCellDegrees,
                  (static_cast<double>(best->first.second) + 0.5) * kAnchorCellDegrees};
}

std::optional<GeoPoint> labeled_anchor(const std::vector<Fix>& fx, LocationType t) {
  for (auto it = fx.rbegin(); it != fx.rend(); ++it) {
    if (it->label == static_cast<int>(t)) return it->p;
  }
  return std::nullopt;
}

const AppCategoryMap& cats(const EngineConfig& cfg) {
  return cfg.categories ? *cfg.categories : AppCategoryMap::defaults();
}

std::int64_t screen_on_on_date(const ScreenHistory& h, const LocalClock& clock, LocalDate d,
                               std::int64_t upto) {
  std::int64_t ms = 0;
  const std::int64_t lo = clock.midnight(d), hi = clock.midnight(d + 1);
  for (const auto& iv : h.closed) ms += clip(iv.a, iv.b, lo, hi);
  if (h.known && h.on) ms += clip(h.onStart, upto, lo, hi);
  return ms;
}

}  // namespace

Signals signals_at(std::span<const SensorEvent> events, std::size_t i, const EngineConfig& cfg) {
  const auto ev = events.subspan(0, i + 1);
  const LocalClock clock(cfg.tzOffsetMinutes);
  const SensorEvent& cur = ev.back();
  const std::int64_t now = cur.timestamp;
  Signals s;
  s.now = now;
  s.date = clock.date(now);
  s.timeOfDay = clock.time_of_day(now);
  s.night = clock.night(now);

  // activity
  {
    const auto iv = activity_intervals(ev, now + kActivityHoldMs);
    for (const auto& [span, kind] : iv) {
      if (kind == ActivityKind::Walking) {
        s.walkingMs15 += clip(span.a, span.b, now - cfg.rules.walkingWindowMs, now);
      }
      if (kind == ActivityKind::Running) {
        s.runningMs10 += clip(span.a, span.b, now - cfg.rules.runningWindowMs, now);
      }
    }
    if (!iv.empty() && now < iv.back().first.a + kActivityHoldMs) {
      const ActivityKind k = iv.back().second;
      s.activity = k;
      std::size_t j = iv.size() - 1;
      while (j > 0 && iv[j - 1].second == k && iv[j].first.a - iv[j - 1].first.a <= kActivityHoldMs) --j;
      if (k == ActivityKind::Running) s.runningBoutMs = now - iv[j].first.a;
      if (k == ActivityKind::Still) s.stillStreakMs = now - iv[j].first.a;
    }
  }

  // vigorous seconds
  {
    std::map<std::int64_t, std::pair<double, int>> buckets;
    for (const auto& e : ev) {
      if (auto* a = as<Accelerometer>(e)) {
        const double dyn = std::sqrt(a->x * a->x + a->y * a->y + a->z * a->z) - kGravity;
        auto& b = buckets[floor_div(e.timestamp, kSecondMs)];
        b.first += dyn * dyn;
        b.second++;
      }
    }
    auto vigorous = [&](std::int64_t sec) {
      auto it = buckets.find(sec);
      return it != buckets.end() && std::sqrt(it->second.first / it->second.second) > kVigorousRms;
    };
    std::int64_t sec = floor_div(now, kSecondMs) - 1;
    std::int64_t n = 0;
    while (vigorous(sec - n)) ++n;
    s.vigorousStreakMs = n * kSecondMs;
  }

  // screen
  {
    const auto h = screen_history(ev);
    s.screenKnown = h.known;
    if (h.known) {
      s.screenOn = h.on;
      s.screenOffMs = h.on ? 0 : now - h.offStart;
      const auto* sc = as<ScreenStatus>(cur);
      if (sc && sc->screenStatus != ScreenState::Off) {
        const auto before = screen_history(ev.subspan(0, ev.size() - 1));
        if (before.known && !before.on) {
          s.justTurnedOn = true;
          s.priorOffMs = now - before.offStart;
        }
      }
      std::optional<Interval> last_closed;
      if (!h.closed.empty()) last_closed = h.closed.back();
      s.screenOnWithin10 =
          h.on || (last_closed && last_closed->b > now - cfg.rules.storyScreenLookbackMs);
    }
    std::vector<Interval> on;
    const std::int64_t lo = now - 90 * kMinuteMs;
    for (const auto& iv : h.closed) {
      if (iv.b > lo) on.push_back({std::max(iv.a, lo), std::min(iv.b, now)});
    }
    if (h.known && h.on) on.push_back({std::max(h.onStart, lo), now});
    std::int64_t longest = 0, edge = lo;
    for (const auto& iv : on) {
      longest = std::max(longest, iv.a - edge);
      edge = std::max(edge, iv.b);
    }
    s.longestOffGap90Ms = std::max(longest, now - edge);

    if (s.timeOfDay >= hm(1) && s.timeOfDay < hm(5)) {
      const std::int64_t from = clock.at(s.date, hm(1));
      for (std::size_t j = 0; j < h.turnOns.size(); ++j) {
        if (h.turnOns[j] >= from && h.priorOff[j] >= cfg.rules.insomniaMinGapMs) {
          if (s.insomniaEpisodes == 0) s.firstInsomniaEpisodeAt = h.turnOns[j];
          s.insomniaEpisodes++;
        }
      }
    }
  }

  for (const auto& e : ev) {
    if (auto* l = as<Light>(e)) s.lightLux = l->lightLevel;
  }

  // location
  {
    const auto fx = fixes(ev);
    if (!fx.empty()) {
      const std::size_t last = fx.size() - 1;
      const std::size_t b = run_begin(fx, last);
      s.hasFix = true;
      if (fx[last].label != kUnlabeled) s.locationLabel = static_cast<LocationType>(fx[last].label);
      s.locationFresh = now - fx[last].t <= kLocationGapMs;
      s.dwellStart = fx[b].t;
      s.lastFixAt = fx[last].t;
      s.dwellMs = fx[last].t - fx[b].t;
      s.lastFix = fx[last].p;
      s.homeAnchor = labeled_anchor(fx, LocationType::Home);
      if (!s.homeAnchor) s.homeAnchor = cluster_anchor(fx, clock, true);
      s.workAnchor = labeled_anchor(fx, LocationType::Work);
      if (!s.workAnchor) s.workAnchor = cluster_anchor(fx, clock, false);
      const int work = static_cast<int>(LocationType::Work);
      if (as<Location>(cur) && last > 0 && fx[last - 1].label == work && fx[last].label != work) {
        s.justLeftWork = true;
      }
      const std::int64_t lo = clock.midnight(s.date), hi = clock.midnight(s.date + 1);
      for (std::size_t j = 1; j < fx.size(); ++j) {
        if (fx[j - 1].label == work && fx[j].label == work && fx[j].t - fx[j - 1].t <= kLocationGapMs) {
          s.workPresenceTodayMs += clip(fx[j - 1].t, fx[j].t, lo, hi);
        }
      }
      for (const auto& f : fx) {
        if (f.label == work && clock.date(f.t) == s.date) {
          s.firstWorkFixToday = f.t;
          break;
        }
      }
    }
  }

  // usage and media
  {
    const auto& map = cats(cfg);
    if (s.timeOfDay < hm(6)) {
      for (const auto& e : ev) {
        auto* u = as<AppUsage>(e);
        if (u && clock.date(e.timestamp) == s.date && map.category(u->packageName) == AppCategory::Social) {
          s.socialTonightMs += u->duration * kSecondMs;
        }
      }
    }
    std::vector<std::pair<std::int64_t, bool>> fg, audio;
    for (const auto& e : ev) {
      if (auto* f = as<ForegroundApp>(e)) {
        fg.emplace_back(e.timestamp, map.category(f->packageName) == AppCategory::Video);
      }
      if (auto* a = as<Audio>(e)) audio.emplace_back(e.timestamp, a->isActive);
    }
    if (!fg.empty() && fg.back().second && now - fg.back().first <= kForegroundGapMs) {
      std::size_t j = fg.size() - 1;
      while (j > 0 && fg[j - 1].second && fg[j].first - fg[j - 1].first <= kForegroundGapMs) --j;
      s.videoRunActive = true;
      s.videoRunStart = fg[j].first;
    }
    if (!audio.empty()) {
      s.audioFresh = now - audio.back().first <= kAudioGapMs;
      s.audioActive = audio.back().second;
      if (s.audioActive) {
        std::size_t j = audio.size() - 1;
        while (j > 0 && audio[j - 1].second && audio[j].first - audio[j - 1].first <= kAudioGapMs) --j;
        s.audioRunStart = audio[j].first;
        s.audioRunMs = audio.back().first - audio[j].first;
      }
    }
  }
  return s;
}

DailySummary daily_summary(std::span<const SensorEvent> events, LocalDate d,
                           const EngineConfig& cfg) {
  DailySummary out;
  out.date = d;
  if (events.empty()) return out;
  const LocalClock clock(cfg.tzOffsetMinutes);
  const std::int64_t last_t = events.back().timestamp;
  const std::int64_t lo = clock.midnight(d), hi = clock.midnight(d + 1);

  const auto h = screen_history(events);
  out.screenOnMs = screen_on_on_date(h, clock, d, last_t);

  // usage claims replay the stream in order, each record claiming what is
  // left of its own day's screen-on time so far
  std::map<LocalDate, std::int64_t> claimed;
  const auto& map = cats(cfg);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto* u = as<AppUsage>(events[i]);
    if (!u) continue;
    const std::int64_t t = events[i].timestamp;
    const LocalDate ud = clock.date(t);
    const auto hp = screen_history(events.subspan(0, i + 1));
    const std::int64_t budget = screen_on_on_date(hp, clock, ud, t) - claimed[ud];
    const std::int64_t c = std::clamp<std::int64_t>(u->duration * kSecondMs, 0, std::max<std::int64_t>(0, budget));
    claimed[ud] += c;
    if (ud == d) out.usageMs[static_cast<std::size_t>(map.category(u->packageName))] += c;
  }

  for (const auto& [span, kind] : activity_intervals(events, last_t)) {
    out.activityMs[static_cast<std::size_t>(kind)] += clip(span.a, span.b, lo, hi);
  }

  const auto fx = fixes(events);
  std::size_t b = 0;
  for (std::size_t j = 0; j < fx.size(); ++j) {
    const bool ends = j + 1 == fx.size() || fx[j + 1].label != fx[j].label ||
                      fx[j + 1].t - fx[j].t > kLocationGapMs;
    if (!ends) continue;
    if (fx[j].t >= lo && fx[b].t < hi) {
      std::optional<LocationType> label;
      if (fx[j].label != kUnlabeled) label = static_cast<LocationType>(fx[j].label);
      out.locationTimeline.push_back({label, std::max(fx[b].t, lo), std::min(fx[j].t, hi)});
    }
    b = j + 1;
  }
  return out;
}

double window_usage(std::span<const SensorEvent> events, AppCategory category, std::int64_t start,
                    std::int64_t end, const EngineConfig& cfg) {
  std::int64_t ms = 0;
  for (const auto& e : events) {
    auto* u = as<AppUsage>(e);
    if (u && e.timestamp >= start && e.timestamp <= end &&
        cats(cfg).category(u->packageName) == category) {
      ms += u->duration * kSecondMs;
    }
  }
  return static_cast<double>(ms) / kMinuteMs;
}

std::optional<double> dwell(std::span<const SensorEvent> events, LocationType label) {
  const auto fx = fixes(events);
  if (fx.empty() || fx.back().label != static_cast<int>(label)) return std::nullopt;
  const std::size_t b = run_begin(fx, fx.size() - 1);
  return static_cast<double>(fx.back().t - fx[b].t) / kMinuteMs;
}

std::vector<ScenarioTrigger> evaluate(std::span<const SensorEvent> events, const EngineConfig& cfg) {
  RuleBook rules(cfg.rules);
  std::vector<ScenarioTrigger> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Signals s = signals_at(events, i, cfg);
    auto fired = rules.evaluate(s, [&](LocalDate d) {
      return daily_summary(events.subspan(0, i + 1), d, cfg);
    });
    out.insert(out.end(), fired.begin(), fired.end());
  }
  return out;
}

}  // namespace contexta::reference
