#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "contexta/trigger.hpp"

namespace contexta {

/// One subscriber's bounded queue. When full, the oldest pending trigger is
/// discarded and counted.
class Subscription {
 public:
  Subscription(std::set<ScenarioId> filter, std::size_t capacity)
      : filter_(std::move(filter)), capacity_(capacity) {}

  bool matches(ScenarioId id) const { return filter_.empty() || filter_.count(id) > 0; }

  std::optional<ScenarioTrigger> try_pop();
  std::optional<ScenarioTrigger> pop(std::chrono::milliseconds timeout);
  std::size_t dropped() const;
  std::size_t pending() const;

  void push(const ScenarioTrigger& t);
  void close();
  bool closed() const;

 private:
  const std::set<ScenarioId> filter_;
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<ScenarioTrigger> queue_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

/// Fan-out of engine triggers to any number of subscribers. An empty filter
/// subscribes to every scenario.
class TriggerBus {
 public:
  static constexpr std::size_t kDefaultCapacity = 256;

  std::shared_ptr<Subscription> subscribe(std::set<ScenarioId> filter = {},
                                          std::size_t capacity = kDefaultCapacity);
  void publish(const ScenarioTrigger& t);
  void close();

 private:
  std::mutex mu_;
  std::vector<std::weak_ptr<Subscription>> subs_;
};

}  // namespace contexta
