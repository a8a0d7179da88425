#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "contexta/scenario.hpp"

namespace contexta {

struct ScenarioTrigger {
  ScenarioId scenarioId{};
  std::int64_t firedAt{};
  std::int64_t windowStart{};  // evidence window
  std::int64_t windowEnd{};
  std::map<std::string, double> metrics;
  std::string cooldownKey;

  bool operator==(const ScenarioTrigger&) const = default;
};

std::string serialize_trigger(const ScenarioTrigger& t);
/// Throws SchemaViolation / MalformedRecord.
ScenarioTrigger parse_trigger(std::string_view json);

}  // namespace contexta
