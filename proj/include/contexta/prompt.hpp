#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contexta/scenario.hpp"
#include "contexta/trigger.hpp"

namespace contexta {

struct PromptTemplate {
  std::string role, task, requirement, style;
};

/// Parses a template file with [role], [task], [requirement] and [style]
/// sections. Throws TemplateError.
PromptTemplate parse_template(std::string_view text, std::string_view name = "template");

class TemplateSet {
 public:
  /// Loads `dir/manifest.json` and every file it lists. Throws MissingTemplate
  /// when a scenario has no entry, TemplateError on bad files.
  static TemplateSet load_dir(const std::string& dir);
  /// Templates shipped with the source tree.
  static const TemplateSet& bundled();

  void add(ScenarioId id, PromptTemplate t) { templates_[id] = std::move(t); }
  void set_preamble(ScenarioCategory c, std::string text) {
    preambles_[static_cast<std::size_t>(c)] = std::move(text);
  }

  /// Throws MissingTemplate.
  const PromptTemplate& at(ScenarioId id) const;
  const std::string& preamble(ScenarioCategory c) const {
    return preambles_[static_cast<std::size_t>(c)];
  }
  std::size_t size() const { return templates_.size(); }
  int version() const { return version_; }

 private:
  std::map<ScenarioId, PromptTemplate> templates_;
  std::array<std::string, 4> preambles_{};
  int version_ = 0;
};

enum class Direction : std::uint8_t { User, Assistant };
std::string_view to_string(Direction d);

struct HistoryEntry {
  std::string messageId;
  Direction direction = Direction::User;
  std::string text;
  std::int64_t timestamp = 0;
  std::optional<std::string> feedbackEmoji;
  bool operator==(const HistoryEntry&) const = default;
};

/// Most recent entries, oldest evicted first.
class InteractionHistory {
 public:
  static constexpr std::size_t kDefaultCapacity = 50;
  explicit InteractionHistory(std::size_t capacity = kDefaultCapacity)
      : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(HistoryEntry e);
  /// Returns false when the message is no longer (or never was) held.
  bool set_feedback(const std::string& messageId, std::string emoji);
  /// The last `k` entries, oldest first.
  std::vector<HistoryEntry> recent(std::size_t k) const;
  const std::deque<HistoryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<HistoryEntry> entries_;
};

struct PromptSpec {
  ScenarioId scenarioId{};
  std::string preamble;
  std::string role, task, requirement, styleReference;
  std::string contextBlock;
  std::int64_t createdAt = 0;  // trigger firing time
  bool operator==(const PromptSpec&) const = default;
};

struct BuildOptions {
  std::size_t historyTurns = 10;
  int tzOffsetMinutes = 480;
};

/// Throws MissingTemplate, or TemplateError when a placeholder cannot be
/// resolved.
PromptSpec build_prompt(const ScenarioTrigger& trigger, const InteractionHistory& history,
                        const TemplateSet& templates, const BuildOptions& opts = {});

/// Preamble, Role, Task, Requirement, Style Reference, Context.
std::string render_prompt(const PromptSpec& spec);

/// Shortest fixed form with at most two decimals: 120, 2.5, 0.33.
std::string format_metric(double v);

/// Reads the scenario name back out of a rendered prompt.
std::optional<ScenarioId> prompt_scenario(std::string_view rendered);

}  // namespace contexta
