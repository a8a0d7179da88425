#include "contexta/trigger.hpp"

#include <nlohmann/json.hpp>

#include "contexta/error.hpp"
#include "contexta/json_line.hpp"

namespace contexta {

std::string serialize_trigger(const ScenarioTrigger& t) {
  std::string window = "[" + std::to_string(t.windowStart) + "," +
                       std::to_string(t.windowEnd) + "]";
  JsonLine metrics;
  for (const auto& [k, v] : t.metrics) metrics.field(k, v);
  return JsonLine()
      .field("scenarioId", to_string(t.scenarioId))
      .field("firedAt", t.firedAt)
      .raw("evidenceWindow", window)
      .raw("metrics", metrics.str())
      .field("cooldownKey", t.cooldownKey)
      .str();
}

ScenarioTrigger parse_trigger(std::string_view text) {
  using nlohmann::json;
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw MalformedRecord(0, "<trigger>", "not a JSON object");
  }
  try {
    ScenarioTrigger t;
    auto name = j.at("scenarioId").get<std::string>();
    auto id = scenario_from_string(name);
    if (!id) throw SchemaViolation(0, "scenarioId", "unknown scenario '" + name + "'");
    t.scenarioId = *id;
    t.firedAt = j.at("firedAt").get<std::int64_t>();
    const auto& w = j.at("evidenceWindow");
    if (!w.is_array() || w.size() != 2) {
      throw SchemaViolation(0, "evidenceWindow", "expected [start,end]");
    }
    t.windowStart = w[0].get<std::int64_t>();
    t.windowEnd = w[1].get<std::int64_t>();
    for (auto it = j.at("metrics").begin(); it != j.at("metrics").end(); ++it) {
      t.metrics[it.key()] = it->get<double>();
    }
    t.cooldownKey = j.at("cooldownKey").get<std::string>();
    return t;
  } catch (const json::exception& e) {
    throw SchemaViolation(0, "<trigger>", e.what());
  }
}

}  // namespace contexta
