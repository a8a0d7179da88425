#include "contexta/engine.hpp"

#include <algorithm>
#include <cmath>

#include "contexta/error.hpp"
#include "contexta/trigger_bus.hpp"

namespace contexta {

namespace detail {

void add_by_date(std::map<LocalDate, std::int64_t>& per_date, const LocalClock& clock,
                 std::int64_t a, std::int64_t b) {
  while (a < b) {
    const LocalDate d = clock.date(a);
    const std::int64_t next = clock.midnight(d + 1);
    const std::int64_t piece_end = std::min(b, next);
    per_date[d] += piece_end - a;
    a = piece_end;
  }
}

std::int64_t overlap_with_date(const LocalClock& clock, LocalDate d, std::int64_t a,
                               std::int64_t b) {
  const std::int64_t lo = std::max(a, clock.midnight(d));
  const std::int64_t hi = std::min(b, clock.midnight(d + 1));
  return hi > lo ? hi - lo : 0;
}

}  // namespace detail

namespace {

std::int64_t overlap(std::int64_t a, std::int64_t b, std::int64_t lo, std::int64_t hi) {
  const std::int64_t s = std::max(a, lo);
  const std::int64_t e = std::min(b, hi);
  return e > s ? e - s : 0;
}

template <typename Map>
typename Map::mapped_type get_or(const Map& m, const typename Map::key_type& k,
                                 typename Map::mapped_type fallback = {}) {
  auto it = m.find(k);
  return it == m.end() ? fallback : it->second;
}

std::optional<GeoPoint> best_cell(
    const std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t>& cells) {
  const std::pair<std::int64_t, std::int64_t>* best = nullptr;
  std::int64_t best_count = 0;
  for (const auto& [cell, count] : cells) {
    if (count > best_count) {
      best_count = count;
      best = &cell;
    }
  }
  if (!best) return std::nullopt;
  return GeoPoint{(static_cast<double>(best->first) + 0.5) * kAnchorCellDegrees,
                  (static_cast<double>(best->second) + 0.5) * kAnchorCellDegrees};
}

}  // namespace

ContextEngine::ContextEngine(EngineConfig cfg)
    : cfg_(cfg),
      categories_(cfg.categories ? cfg.categories : &AppCategoryMap::defaults()),
      clock_(cfg.tzOffsetMinutes),
      rules_(cfg.rules) {}

void ContextEngine::on_activity(std::int64_t t, ActivityKind k) {
  auto& a = activity_;
  if (!a.recent.empty()) {
    const auto& prev = a.recent.back();
    detail::add_by_date(a.perDate[static_cast<std::size_t>(prev.kind)], clock_, prev.t,
                        std::min(t, prev.t + kActivityHoldMs));
    if (!(prev.kind == k && t - prev.t <= kActivityHoldMs)) a.chainStart = t;
  } else {
    a.chainStart = t;
  }
  a.recent.push_back({t, k});
  const std::int64_t horizon =
      t - std::max(cfg_.rules.walkingWindowMs, cfg_.rules.runningWindowMs);
  while (a.recent.size() >= 2 && a.recent[1].t <= horizon) a.recent.pop_front();
}

void ContextEngine::on_screen(std::int64_t t, ScreenState st) {
  auto& s = screen_;
  const bool on = is_on(st);
  if (!s.known) {
    s.known = true;
    s.on = on;
    (on ? s.onStart : s.offStart) = t;
    return;
  }
  if (s.on && !on) {
    if (t > s.onStart) {
      s.closed.emplace_back(s.onStart, t);
      s.lastClosed = std::pair{s.onStart, t};
      detail::add_by_date(s.onPerDate, clock_, s.onStart, t);
    }
    s.on = false;
    s.offStart = t;
  } else if (!s.on && on) {
    justTurnedOn_ = true;
    priorOffMs_ = t - s.offStart;
    if (priorOffMs_ >= cfg_.rules.insomniaMinGapMs) s.qualifyingTurnOns.push_back(t);
    s.on = true;
    s.onStart = t;
  }
  while (!s.closed.empty() && s.closed.front().second <= t - 90 * kMinuteMs) s.closed.pop_front();
  while (!s.qualifyingTurnOns.empty() && s.qualifyingTurnOns.front() < t - kDayMs) {
    s.qualifyingTurnOns.pop_front();
  }
}

void ContextEngine::on_location(std::int64_t t, const Location& loc) {
  auto& l = location_;
  const int label = label_key(loc.locationType);
  const int work = static_cast<int>(LocationType::Work);
  justLeftWork_ = l.has && l.lastLabel == work && label != work;
  if (l.has && l.lastLabel == work && label == work && t - l.lastT <= kLocationGapMs) {
    detail::add_by_date(l.workPerDate, clock_, l.lastT, t);
  }
  if (label == work) l.firstWorkFix.try_emplace(clock_.date(t), t);

  const bool continues = l.has && label == l.lastLabel && t - l.lastT <= kLocationGapMs;
  if (!continues) {
    if (l.has) {
      std::optional<LocationType> prev;
      if (l.lastLabel != kUnlabeled) prev = static_cast<LocationType>(l.lastLabel);
      l.runs.push_back({prev, l.runStart, l.lastT});
    }
    l.runStart = t;
  }
  const GeoPoint pos{loc.lat, loc.lon};
  if (loc.locationType == LocationType::Home) {
    l.homeLabeled = pos;
  } else if (loc.locationType == LocationType::Work) {
    l.workLabeled = pos;
  } else if (!loc.locationType) {
    const std::pair<std::int64_t, std::int64_t> cell{
        static_cast<std::int64_t>(std::floor(loc.lat / kAnchorCellDegrees)),
        static_cast<std::int64_t>(std::floor(loc.lon / kAnchorCellDegrees))};
    const std::int64_t tod = clock_.time_of_day(t);
    if (tod < hm(6)) {
      l.nightCells[cell]++;
    } else if (tod >= hm(9) && tod < hm(17) && clock_.weekday(t) < 5) {
      l.dayCells[cell]++;
    }
  }
  l.has = true;
  l.lastT = t;
  l.lastPos = pos;
  l.lastLabel = label;
  while (!l.runs.empty() && l.runs.front().end < t - 3 * kDayMs) l.runs.erase(l.runs.begin());
}

std::int64_t ContextEngine::screen_on_ms(LocalDate d, std::int64_t upto) const {
  std::int64_t ms = get_or(screen_.onPerDate, d);
  if (screen_.known && screen_.on) {
    ms += detail::overlap_with_date(clock_, d, screen_.onStart, upto);
  }
  return ms;
}

void ContextEngine::on_app_usage(std::int64_t t, const AppUsage& u) {
  auto& us = usage_;
  const AppCategory cat = categories_->category(u.packageName);
  const std::int64_t ms = u.duration * kSecondMs;
  const LocalDate d = clock_.date(t);
  us.retained.push_back({t, cat, ms});
  while (!us.retained.empty() && us.retained.front().t < t - cfg_.usageRetentionMs) {
    us.retained.pop_front();
  }
  if (cat == AppCategory::Social) us.socialPerDate[d] += ms;

  const std::int64_t budget = screen_on_ms(d, t) - get_or(us.claimedPerDate, d);
  const std::int64_t claim = std::clamp<std::int64_t>(ms, 0, std::max<std::int64_t>(budget, 0));
  us.claimedPerDate[d] += claim;
  us.claimedByCategory[d][static_cast<std::size_t>(cat)] += claim;
}

void ContextEngine::finalize_bucket(std::int64_t now_sec) {
  auto& v = vigorous_;
  if (!v.open || v.second >= now_sec) return;
  const double rms = std::sqrt(v.sumSq / static_cast<double>(v.count));
  if (rms > kVigorousRms) {
    v.streak = (v.streak > 0 && v.streakEnd == v.second - 1) ? v.streak + 1 : 1;
    v.streakEnd = v.second;
  } else {
    v.streak = 0;
  }
  v.open = false;
}

std::vector<ScenarioTrigger> ContextEngine::ingest(const SensorEvent& e) {
  if (started_ && e.timestamp < lastTs_) throw OutOfOrderEvent(lastTs_, e.timestamp);
  if (e.payload.index() >= kChannelCount || e.payload.valueless_by_exception()) {
    throw UnknownChannel("event payload carries no known channel");
  }
  const std::int64_t t = e.timestamp;
  started_ = true;
  lastTs_ = t;
  ++ingested_;
  justTurnedOn_ = false;
  priorOffMs_ = 0;
  justLeftWork_ = false;

  const std::int64_t sec = floor_div(t, kSecondMs);
  finalize_bucket(sec);

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ActivityReading>) {
          on_activity(t, p.activity);
        } else if constexpr (std::is_same_v<T, Accelerometer>) {
          auto& v = vigorous_;
          if (!v.open) {
            v.open = true;
            v.second = sec;
            v.sumSq = 0.0;
            v.count = 0;
          }
          const double dyn = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z) - kGravity;
          v.sumSq += dyn * dyn;
          v.count++;
        } else if constexpr (std::is_same_v<T, ScreenStatus>) {
          on_screen(t, p.screenStatus);
        } else if constexpr (std::is_same_v<T, Light>) {
          usage_.lightLux = p.lightLevel;
        } else if constexpr (std::is_same_v<T, Location>) {
          on_location(t, p);
        } else if constexpr (std::is_same_v<T, AppUsage>) {
          on_app_usage(t, p);
        } else if constexpr (std::is_same_v<T, ForegroundApp>) {
          auto& u = usage_;
          const bool video = categories_->category(p.packageName) == AppCategory::Video;
          if (video && !(u.fgHas && u.fgVideo && t - u.fgT <= kForegroundGapMs)) {
            u.videoRunStart = t;
          }
          u.fgHas = true;
          u.fgVideo = video;
          u.fgT = t;
        } else if constexpr (std::is_same_v<T, Audio>) {
          auto& u = usage_;
          if (p.isActive && !(u.audioHas && u.audioActive && t - u.audioT <= kAudioGapMs)) {
            u.audioRunStart = t;
          }
          u.audioHas = true;
          u.audioActive = p.isActive;
          u.audioT = t;
        }
      },
      e.payload);

  compute_signals(t);
  auto triggers = rules_.evaluate(signals_, [this](LocalDate d) { return daily_summary(d); });
  if (bus_) {
    for (const auto& tr : triggers) bus_->publish(tr);
  }
  return triggers;
}

void ContextEngine::compute_signals(std::int64_t now) {
  Signals s;
  s.now = now;
  s.date = clock_.date(now);
  s.timeOfDay = clock_.time_of_day(now);
  s.night = clock_.night(now);

  // activity
  const auto& a = activity_;
  if (!a.recent.empty()) {
    const auto& last = a.recent.back();
    if (now < last.t + kActivityHoldMs) {
      s.activity = last.kind;
      if (last.kind == ActivityKind::Running) s.runningBoutMs = now - a.chainStart;
      if (last.kind == ActivityKind::Still) s.stillStreakMs = now - a.chainStart;
    }
    const std::int64_t walk_lo = now - cfg_.rules.walkingWindowMs;
    const std::int64_t run_lo = now - cfg_.rules.runningWindowMs;
    for (std::size_t i = 0; i < a.recent.size(); ++i) {
      const auto& r = a.recent[i];
      const std::int64_t end = i + 1 < a.recent.size()
                                   ? std::min(a.recent[i + 1].t, r.t + kActivityHoldMs)
                                   : std::min(now, r.t + kActivityHoldMs);
      if (r.kind == ActivityKind::Walking) s.walkingMs15 += overlap(r.t, end, walk_lo, now);
      if (r.kind == ActivityKind::Running) s.runningMs10 += overlap(r.t, end, run_lo, now);
    }
  }
  const std::int64_t now_sec = floor_div(now, kSecondMs);
  if (vigorous_.streak > 0 && vigorous_.streakEnd == now_sec - 1) {
    s.vigorousStreakMs = vigorous_.streak * kSecondMs;
  }

  // screen
  const auto& sc = screen_;
  s.screenKnown = sc.known;
  if (sc.known) {
    s.screenOn = sc.on;
    s.screenOffMs = sc.on ? 0 : now - sc.offStart;
    s.justTurnedOn = justTurnedOn_;
    s.priorOffMs = justTurnedOn_ ? priorOffMs_ : 0;
    s.screenOnWithin10 =
        sc.on || (sc.lastClosed && sc.lastClosed->second > now - cfg_.rules.storyScreenLookbackMs);
  }
  {
    const std::int64_t lo = now - 90 * kMinuteMs;
    std::int64_t cursor = lo;
    std::int64_t longest = 0;
    auto visit = [&](std::int64_t a0, std::int64_t b0) {
      const std::int64_t a1 = std::max(a0, lo);
      const std::int64_t b1 = std::min(b0, now);
      if (b1 < a1) return;
      longest = std::max(longest, a1 - cursor);
      cursor = std::max(cursor, b1);
    };
    for (const auto& [a0, b0] : sc.closed) {
      if (b0 > lo) visit(a0, b0);
    }
    if (sc.known && sc.on) visit(sc.onStart, now);
    s.longestOffGap90Ms = std::max(longest, now - cursor);
  }
  if (s.timeOfDay >= hm(1) && s.timeOfDay < hm(5)) {
    const std::int64_t from = clock_.at(s.date, hm(1));
    for (std::int64_t q : sc.qualifyingTurnOns) {
      if (q >= from && q <= now) {
        if (s.insomniaEpisodes == 0) s.firstInsomniaEpisodeAt = q;
        s.insomniaEpisodes++;
      }
    }
  }

  s.lightLux = usage_.lightLux;

  // location
  const auto& l = location_;
  if (l.has) {
    s.hasFix = true;
    if (l.lastLabel != kUnlabeled) s.locationLabel = static_cast<LocationType>(l.lastLabel);
    s.locationFresh = now - l.lastT <= kLocationGapMs;
    s.dwellStart = l.runStart;
    s.lastFixAt = l.lastT;
    s.dwellMs = l.lastT - l.runStart;
    s.lastFix = l.lastPos;
    s.homeAnchor = l.homeLabeled ? l.homeLabeled : best_cell(l.nightCells);
    s.workAnchor = l.workLabeled ? l.workLabeled : best_cell(l.dayCells);
  }
  s.justLeftWork = justLeftWork_;
  s.workPresenceTodayMs = get_or(l.workPerDate, s.date);
  s.firstWorkFixToday = get_or(l.firstWorkFix, s.date);

  // usage / media
  const auto& u = usage_;
  if (s.timeOfDay < hm(6)) s.socialTonightMs = get_or(u.socialPerDate, s.date);
  if (u.fgHas && u.fgVideo && now - u.fgT <= kForegroundGapMs) {
    s.videoRunActive = true;
    s.videoRunStart = u.videoRunStart;
  }
  if (u.audioHas) {
    s.audioFresh = now - u.audioT <= kAudioGapMs;
    s.audioActive = u.audioActive;
    if (u.audioActive) {
      s.audioRunStart = u.audioRunStart;
      s.audioRunMs = u.audioT - u.audioRunStart;
    }
  }
  signals_ = std::move(s);
}

double ContextEngine::window_usage(AppCategory category, std::int64_t start,
                                   std::int64_t end) const {
  std::int64_t ms = 0;
  auto it = std::lower_bound(usage_.retained.begin(), usage_.retained.end(), start,
                             [](const auto& r, std::int64_t v) { return r.t < v; });
  for (; it != usage_.retained.end() && it->t <= end; ++it) {
    if (it->category == category) ms += it->ms;
  }
  return static_cast<double>(ms) / kMinuteMs;
}

std::optional<double> ContextEngine::dwell(LocationType label) const {
  if (!location_.has || location_.lastLabel != static_cast<int>(label)) return std::nullopt;
  return static_cast<double>(location_.lastT - location_.runStart) / kMinuteMs;
}

DailySummary ContextEngine::daily_summary(LocalDate d) const {
  DailySummary out;
  out.date = d;
  if (!started_) return out;
  out.screenOnMs = screen_on_ms(d, lastTs_);
  if (auto it = usage_.claimedByCategory.find(d); it != usage_.claimedByCategory.end()) {
    out.usageMs = it->second;
  }
  for (std::size_t k = 0; k < kActivityKindCount; ++k) {
    out.activityMs[k] = get_or(activity_.perDate[k], d);
  }
  if (!activity_.recent.empty()) {
    const auto& last = activity_.recent.back();
    out.activityMs[static_cast<std::size_t>(last.kind)] += detail::overlap_with_date(
        clock_, d, last.t, std::min(lastTs_, last.t + kActivityHoldMs));
  }
  const std::int64_t day_lo = clock_.midnight(d);
  const std::int64_t day_hi = clock_.midnight(d + 1);
  auto add_span = [&](const LocationSpan& r) {
    if (r.end >= day_lo && r.start < day_hi) {
      out.locationTimeline.push_back(
          {r.label, std::max(r.start, day_lo), std::min(r.end, day_hi)});
    }
  };
  for (const auto& r : location_.runs) add_span(r);
  if (location_.has) {
    std::optional<LocationType> label;
    if (location_.lastLabel != kUnlabeled) label = static_cast<LocationType>(location_.lastLabel);
    add_span({label, location_.runStart, location_.lastT});
  }
  return out;
}

std::vector<ScenarioTrigger> run_engine(std::span<const SensorEvent> events,
                                        const EngineConfig& cfg) {
  ContextEngine engine(cfg);
  std::vector<ScenarioTrigger> out;
  for (const auto& e : events) {
    auto t = engine.ingest(e);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return out;
}

}  // namespace contexta
