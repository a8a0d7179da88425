#pragma once

#include <array>
#include <cstdint>

#include "contexta/trace.hpp"

namespace contexta {

struct NoiseProfile {
  double dropoutRate = 0.0;     // per event, [0, 1)
  double jitterStdDev = 0.0;    // ms
  double jitterCapMs = 2000.0;  // |offset| never exceeds this
  /// Additive offset per channel, applied to the channel's numeric reading
  /// (acceleration/rotation axes, lux, battery level, coordinates) and
  /// clamped to the valid range.
  std::array<double, kChannelCount> bias{};
};

/// Drops, jitters and biases events, then restores timestamp order with a
/// stable sort. Timestamps stay inside [startTime, endTime]. Labels and the
/// header are copied unchanged. Deterministic in (trace, noise, seed).
Trace perturb(const Trace& trace, const NoiseProfile& noise, std::uint64_t seed);

}  // namespace contexta
