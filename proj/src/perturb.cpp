#include "contexta/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace contexta {

namespace {

class Draws {
 public:
  explicit Draws(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 eng_;
};

void add_bias(Payload& p, double b) {
  std::visit(
      [b](auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Accelerometer> || std::is_same_v<T, Gyroscope>) {
          v.x += b;
          v.y += b;
          v.z += b;
        } else if constexpr (std::is_same_v<T, Light>) {
          v.lightLevel = std::max(0.0, v.lightLevel + b);
        } else if constexpr (std::is_same_v<T, Battery>) {
          v.level = std::clamp(v.level + b, 0.0, 100.0);
        } else if constexpr (std::is_same_v<T, Location>) {
          v.lat = std::clamp(v.lat + b, -90.0, 90.0);
          v.lon = std::clamp(v.lon + b, -180.0, 180.0);
        }
      },
      p);
}

}  // namespace

Trace perturb(const Trace& trace, const NoiseProfile& noise, std::uint64_t seed) {
  Trace out;
  out.header = trace.header;
  out.labels = trace.labels;
  out.events.reserve(trace.events.size());
  Draws drop(seed * 2 + 1);
  Draws jitter(seed * 2 + 2);
  const double cap = std::max(0.0, noise.jitterCapMs);
  for (const auto& e : trace.events) {
    if (noise.dropoutRate > 0.0 && drop.uniform() < noise.dropoutRate) continue;
    SensorEvent c = e;
    if (noise.jitterStdDev > 0.0) {
      const double off = std::clamp(noise.jitterStdDev * jitter.normal(), -cap, cap);
      std::int64_t t = c.timestamp + static_cast<std::int64_t>(std::llround(off));
      if (trace.header.endTime > trace.header.startTime) {
        t = std::clamp(t, trace.header.startTime, trace.header.endTime);
      }
      c.timestamp = std::max<std::int64_t>(1, t);
    }
    const double b = noise.bias[static_cast<std::size_t>(c.channel())];
    if (b != 0.0) add_bias(c.payload, b);
    out.events.push_back(std::move(c));
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const SensorEvent& a, const SensorEvent& b) { return a.timestamp < b.timestamp; });
  return out;
}

}  // namespace contexta
