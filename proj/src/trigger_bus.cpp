#include "contexta/trigger_bus.hpp"

namespace contexta {

void Subscription::push(const ScenarioTrigger& t) {
  {
    std::lock_guard lk(mu_);
    if (closed_) return;
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(t);
  }
  cv_.notify_one();
}

std::optional<ScenarioTrigger> Subscription::try_pop() {
  std::lock_guard lk(mu_);
  if (queue_.empty()) return std::nullopt;
  auto t = std::move(queue_.front());
  queue_.pop_front();
  return t;
}

std::optional<ScenarioTrigger> Subscription::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  if (!cv_.wait_for(lk, timeout, [&] { return !queue_.empty() || closed_; })) return std::nullopt;
  if (queue_.empty()) return std::nullopt;
  auto t = std::move(queue_.front());
  queue_.pop_front();
  return t;
}

std::size_t Subscription::dropped() const {
  std::lock_guard lk(mu_);
  return dropped_;
}

std::size_t Subscription::pending() const {
  std::lock_guard lk(mu_);
  return queue_.size();
}

void Subscription::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Subscription::closed() const {
  std::lock_guard lk(mu_);
  return closed_;
}

std::shared_ptr<Subscription> TriggerBus::subscribe(std::set<ScenarioId> filter,
                                                    std::size_t capacity) {
  auto sub = std::make_shared<Subscription>(std::move(filter), capacity == 0 ? 1 : capacity);
  std::lock_guard lk(mu_);
  subs_.push_back(sub);
  return sub;
}

void TriggerBus::publish(const ScenarioTrigger& t) {
  std::lock_guard lk(mu_);
  for (auto it = subs_.begin(); it != subs_.end();) {
    if (auto s = it->lock()) {
      if (s->matches(t.scenarioId)) s->push(t);
      ++it;
    } else {
      it = subs_.erase(it);
    }
  }
}

void TriggerBus::close() {
  std::lock_guard lk(mu_);
  for (auto& w : subs_) {
    if (auto s = w.lock()) s->close();
  }
  subs_.clear();
}

}  // namespace contexta
