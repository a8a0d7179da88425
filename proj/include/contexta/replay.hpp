#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>

#include "contexta/trace.hpp"

namespace contexta {

struct ReplayReport {
  std::size_t delivered = 0;
  std::size_t skipped = 0;   // passed over by a forward seek
  std::size_t seeks = 0;
  double wallMs = 0.0;
  bool failed = false;
  bool stopped = false;
};

/// Receives replayed events serially on the replay thread. on_end is the
/// final marker and is called exactly once, including after a failure.
class ReplaySink {
 public:
  virtual ~ReplaySink() = default;
  virtual void on_event(const SensorEvent& e) = 0;
  virtual void on_end(const ReplayReport&) {}
};

/// Adapts a callable.
class FunctionSink : public ReplaySink {
 public:
  explicit FunctionSink(std::function<void(const SensorEvent&)> fn) : fn_(std::move(fn)) {}
  void on_event(const SensorEvent& e) override { fn_(e); }

 private:
  std::function<void(const SensorEvent&)> fn_;
};

struct ReplayCommand {
  enum class Kind : std::uint8_t { Pause, Resume, Seek, Speed, Stop };
  Kind kind;
  double value = 0.0;  // Seek: trace timestamp (ms); Speed: multiplier, 0 = max
};

/// Thread-safe control queue. Commands are applied between events.
class ReplayControl {
 public:
  void post(ReplayCommand c);
  void pause() { post({ReplayCommand::Kind::Pause}); }
  void resume() { post({ReplayCommand::Kind::Resume}); }
  void seek(std::int64_t t) { post({ReplayCommand::Kind::Seek, static_cast<double>(t)}); }
  void set_speed(double x) { post({ReplayCommand::Kind::Speed, x}); }
  void stop() { post({ReplayCommand::Kind::Stop}); }

  std::optional<ReplayCommand> try_take();
  /// Blocks up to `d` for a command.
  std::optional<ReplayCommand> take_for(std::chrono::milliseconds d);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<ReplayCommand> queue_;
};

struct ReplayOptions {
  std::optional<double> speed;  // nullopt: as fast as possible
  ReplayControl* control = nullptr;
};

/// Pulls the next event; nullopt at the end.
using EventSource = std::function<std::optional<SensorEvent>()>;

/// Delivers events in order, waiting Δt/speed of wall time between them.
/// Seeking backwards is supported for in-memory traces only; on a source it
/// is ignored. A sink exception is reported as SinkFailure after on_end.
ReplayReport replay(const Trace& trace, ReplaySink& sink, const ReplayOptions& opts = {});
ReplayReport replay(const EventSource& source, ReplaySink& sink, const ReplayOptions& opts = {});

/// Parses "max" or a positive multiplier. Throws BadConfig.
std::optional<double> parse_speed(std::string_view s);

}  // namespace contexta
