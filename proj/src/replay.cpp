#include "contexta/replay.hpp"

#include <algorithm>
#include <charconv>
#include <string>
#include <thread>

#include "contexta/error.hpp"

namespace contexta {

void ReplayControl::post(ReplayCommand c) {
  {
    std::lock_guard lk(mu_);
    queue_.push_back(c);
  }
  cv_.notify_all();
}

std::optional<ReplayCommand> ReplayControl::try_take() {
  std::lock_guard lk(mu_);
  if (queue_.empty()) return std::nullopt;
  auto c = queue_.front();
  queue_.pop_front();
  return c;
}

std::optional<ReplayCommand> ReplayControl::take_for(std::chrono::milliseconds d) {
  std::unique_lock lk(mu_);
  if (!cv_.wait_for(lk, d, [&] { return !queue_.empty(); })) return std::nullopt;
  auto c = queue_.front();
  queue_.pop_front();
  return c;
}

std::optional<double> parse_speed(std::string_view s) {
  if (s == "max") return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !(v > 0)) {
    throw BadConfig("speed must be 'max' or a positive number, got '" + std::string(s) + "'");
  }
  return v;
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr auto kSlice = std::chrono::milliseconds(50);

// Shared loop. `at(i)` returns event i or nullptr past the end; `seek_to`
// repositions for a timestamp and returns the new index.
template <class At, class SeekTo>
ReplayReport run(At at, SeekTo seek_to, ReplaySink& sink, const ReplayOptions& opts) {
  ReplayReport rep;
  const auto began = Clock::now();
  std::optional<double> speed = opts.speed;
  bool paused = false;
  bool anchored = false;
  std::int64_t anchorT = 0;
  Clock::time_point anchorWall;
  std::size_t i = 0;

  auto finish = [&] {
    rep.wallMs = std::chrono::duration<double, std::milli>(Clock::now() - began).count();
  };

  // Applies one command; returns false on Stop.
  auto apply = [&](const ReplayCommand& c) {
    switch (c.kind) {
      case ReplayCommand::Kind::Pause:
        paused = true;
        break;
      case ReplayCommand::Kind::Resume:
        paused = false;
        anchored = false;
        break;
      case ReplayCommand::Kind::Seek: {
        const std::size_t before = i;
        i = seek_to(static_cast<std::int64_t>(c.value), i);
        if (i > before) rep.skipped += i - before;
        ++rep.seeks;
        anchored = false;
        break;
      }
      case ReplayCommand::Kind::Speed:
        speed = c.value > 0 ? std::optional(c.value) : std::nullopt;
        anchored = false;
        break;
      case ReplayCommand::Kind::Stop:
        rep.stopped = true;
        return false;
    }
    return true;
  };

  auto drain = [&] {
    if (!opts.control) return true;
    while (auto c = opts.control->try_take()) {
      if (!apply(*c)) return false;
    }
    while (paused) {
      auto c = opts.control->take_for(kSlice);
      if (c && !apply(*c)) return false;
    }
    return true;
  };

  try {
    while (true) {
      if (!drain()) break;
      const SensorEvent* e = at(i);
      if (!e) break;
      if (speed) {
        if (!anchored) {
          anchored = true;
          anchorT = e->timestamp;
          anchorWall = Clock::now();
        }
        const auto due = anchorWall + std::chrono::duration_cast<Clock::duration>(
                                          std::chrono::duration<double, std::milli>(
                                              static_cast<double>(e->timestamp - anchorT) / *speed));
        bool redo = false;
        while (Clock::now() < due) {
          std::this_thread::sleep_for(std::min<Clock::duration>(kSlice, due - Clock::now()));
          if (opts.control) {
            const std::size_t before = i;
            const auto sp = speed;
            if (!drain()) {
              redo = true;
              break;
            }
            if (i != before || sp != speed || !anchored) {
              redo = true;
              break;
            }
          }
        }
        if (rep.stopped) break;
        if (redo) continue;
      }
      sink.on_event(*e);
      ++rep.delivered;
      ++i;
    }
  } catch (const std::exception& ex) {
    rep.failed = true;
    finish();
    sink.on_end(rep);
    throw SinkFailure(std::string("sink failed after ") + std::to_string(rep.delivered) +
                      " events: " + ex.what());
  }
  finish();
  sink.on_end(rep);
  return rep;
}

}  // namespace

ReplayReport replay(const Trace& trace, ReplaySink& sink, const ReplayOptions& opts) {
  const auto& ev = trace.events;
  auto at = [&](std::size_t i) -> const SensorEvent* { return i < ev.size() ? &ev[i] : nullptr; };
  auto seek_to = [&](std::int64_t t, std::size_t) -> std::size_t {
    auto it = std::lower_bound(ev.begin(), ev.end(), t,
                               [](const SensorEvent& e, std::int64_t v) { return e.timestamp < v; });
    return static_cast<std::size_t>(it - ev.begin());
  };
  return run(at, seek_to, sink, opts);
}

ReplayReport replay(const EventSource& source, ReplaySink& sink, const ReplayOptions& opts) {
  std::optional<SensorEvent> cur;
  std::size_t curIndex = 0;
  bool primed = false;
  auto at = [&](std::size_t i) -> const SensorEvent* {
    while (!primed || curIndex < i) {
      cur = source();
      if (primed) ++curIndex;
      primed = true;
      if (!cur) return nullptr;
    }
    return cur ? &*cur : nullptr;
  };
  auto seek_to = [&](std::int64_t t, std::size_t i) -> std::size_t {
    const SensorEvent* e = at(i);
    while (e && e->timestamp < t) e = at(++i);
    return i;
  };
  return run(at, seek_to, sink, opts);
}

}  // namespace contexta
