#include "contexta/prompt.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "contexta/clock.hpp"
#include "contexta/error.hpp"
#include "json.hpp"

#ifndef CONTEXTA_TEMPLATES_DIR
#define CONTEXTA_TEMPLATES_DIR "templates"
#endif

namespace contexta {

namespace {

std::string trim_block(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw TemplateError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr std::array<std::pair<std::string_view, ScenarioCategory>, 4> kCategoryKeys = {{
    {"exercise_activity", ScenarioCategory::ExerciseActivity},
    {"time_routine", ScenarioCategory::TimeRoutine},
    {"location_environment", ScenarioCategory::LocationEnvironment},
    {"usage_media", ScenarioCategory::UsageMedia},
}};

std::string history_lines(const std::vector<HistoryEntry>& entries) {
  std::string out;
  for (const auto& h : entries) {
    if (!out.empty()) out += "\n";
    out += "- ";
    out += to_string(h.direction);
    out += ": ";
    out += h.text;
    if (h.feedbackEmoji) out += " [" + *h.feedbackEmoji + "]";
  }
  return out;
}

// Expands {metric:NAME} and {history}; anything else in braces is an error.
std::string expand(std::string_view text, const ScenarioTrigger& trig, const std::string& history,
                   std::string_view where) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find('{', i);
    if (open == std::string_view::npos) {
      out.append(text.substr(i));
      break;
    }
    out.append(text.substr(i, open - i));
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) {
      throw TemplateError(std::string(where) + ": unterminated placeholder");
    }
    const auto name = text.substr(open + 1, close - open - 1);
    if (name == "history") {
      out += history.empty() ? "(no recent conversation)" : history;
    } else if (name.starts_with("metric:")) {
      const std::string key(name.substr(7));
      auto it = trig.metrics.find(key);
      if (it == trig.metrics.end()) {
        throw TemplateError(std::string(where) + ": trigger has no metric '" + key + "'");
      }
      out += format_metric(it->second);
    } else {
      throw TemplateError(std::string(where) + ": unknown placeholder {" + std::string(name) + "}");
    }
    i = close + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::User ? "user" : "assistant"; }

PromptTemplate parse_template(std::string_view text, std::string_view name) {
  PromptTemplate t;
  std::string* cur = nullptr;
  std::array<bool, 4> seen{};
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("[") && line.ends_with("]")) {
      const auto sec = line.substr(1, line.size() - 2);
      int idx = sec == "role" ? 0 : sec == "task" ? 1 : sec == "requirement" ? 2 : sec == "style" ? 3 : -1;
      if (idx < 0) throw TemplateError(std::string(name) + ":" + std::to_string(no) + ": unknown section " + line);
      if (seen[idx]) throw TemplateError(std::string(name) + ": duplicate section " + line);
      seen[idx] = true;
      std::string* slots[] = {&t.role, &t.task, &t.requirement, &t.style};
      cur = slots[idx];
      continue;
    }
    if (!cur) {
      if (trim_block(line).empty() || line.starts_with("#")) continue;
      throw TemplateError(std::string(name) + ":" + std::to_string(no) + ": text before first section");
    }
    *cur += line;
    *cur += "\n";
  }
  for (auto* s : {&t.role, &t.task, &t.requirement, &t.style}) *s = trim_block(*s);
  if (t.role.empty() || t.task.empty() || t.requirement.empty() || t.style.empty()) {
    throw TemplateError(std::string(name) + ": every section must be present and non-empty");
  }
  return t;
}

TemplateSet TemplateSet::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(root / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError("manifest.json: " + std::string(e.what()));
  }
  TemplateSet set;
  set.version_ = manifest.value("version", 0);
  if (manifest.contains("preambles")) {
    for (const auto& [key, cat] : kCategoryKeys) {
      if (manifest["preambles"].contains(key)) {
        set.set_preamble(cat, manifest["preambles"][std::string(key)].get<std::string>());
      }
    }
  }
  if (!manifest.contains("templates") || !manifest["templates"].is_object()) {
    throw TemplateError("manifest.json: missing 'templates' object");
  }
  for (const auto& [name, file] : manifest["templates"].items()) {
    const auto id = scenario_from_string(name);
    if (!id) throw TemplateError("manifest.json: unknown scenario '" + name + "'");
    set.add(*id, parse_template(read_file(root / file.get<std::string>()), name));
  }
  for (auto id : all_scenarios()) {
    if (!set.templates_.contains(id)) {
      throw MissingTemplate("no template for '" + std::string(to_string(id)) + "' in " + dir);
    }
  }
  return set;
}

const TemplateSet& TemplateSet::bundled() {
  static const TemplateSet set = load_dir(CONTEXTA_TEMPLATES_DIR);
  return set;
}

const PromptTemplate& TemplateSet::at(ScenarioId id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw MissingTemplate("no template for '" + std::string(to_string(id)) + "'");
  }
  return it->second;
}

void InteractionHistory::push(HistoryEntry e) {
  entries_.push_back(std::move(e));
  while (entries_.size() > capacity_) entries_.pop_front();
}

bool InteractionHistory::set_feedback(const std::string& messageId, std::string emoji) {
  for (auto& e : entries_) {
    if (e.messageId == messageId) {
      e.feedbackEmoji = std::move(emoji);
      return true;
    }
  }
  return false;
}

std::vector<HistoryEntry> InteractionHistory::recent(std::size_t k) const {
  const std::size_t n = std::min(k, entries_.size());
  return {entries_.end() - static_cast<std::ptrdiff_t>(n), entries_.end()};
}

std::string format_metric(double v) {
  if (!std::isfinite(v)) return "0";
  const double r = std::round(v * 100.0) / 100.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", r == 0.0 ? 0.0 : r);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

PromptSpec build_prompt(const ScenarioTrigger& trigger, const InteractionHistory& history,
                        const TemplateSet& templates, const BuildOptions& opts) {
  const auto& tpl = templates.at(trigger.scenarioId);
  const auto& info = scenario_info(trigger.scenarioId);
  const std::string hist = history_lines(history.recent(opts.historyTurns));
  const std::string where(to_string(trigger.scenarioId));

  PromptSpec spec;
  spec.scenarioId = trigger.scenarioId;
  spec.createdAt = trigger.firedAt;
  spec.preamble = "[" + std::string(category_title(info.category)) + "]";
  if (const auto& p = templates.preamble(info.category); !p.empty()) spec.preamble += " " + p;
  spec.role = expand(tpl.role, trigger, hist, where);
  spec.task = expand(tpl.task, trigger, hist, where);
  spec.requirement = expand(tpl.requirement, trigger, hist, where);
  spec.styleReference = expand(tpl.style, trigger, hist, where);

  const LocalClock clock(opts.tzOffsetMinutes);
  const int off = opts.tzOffsetMinutes;
  char tz[32];
  std::snprintf(tz, sizeof(tz), "UTC%c%02d:%02d", off < 0 ? '-' : '+', std::abs(off) / 60, std::abs(off) % 60);
  std::ostringstream ctx;
  ctx << "Triggered " << format_date(clock.date(trigger.firedAt)) << " "
      << format_time_of_day(clock.time_of_day(trigger.firedAt)) << " (" << tz << "), evidence since "
      << format_date(clock.date(trigger.windowStart)) << " "
      << format_time_of_day(clock.time_of_day(trigger.windowStart)) << "\n";
  ctx << "Metrics:";
  for (const auto& [k, v] : trigger.metrics) ctx << "\n- " << k << ": " << format_metric(v);
  if (!hist.empty()) ctx << "\nRecent conversation:\n" << hist;
  spec.contextBlock = ctx.str();
  return spec;
}

std::string render_prompt(const PromptSpec& spec) {
  std::string out;
  out += spec.preamble;
  out += "\nScenario: ";
  out += to_string(spec.scenarioId);
  out += "\n\nRole: " + spec.role;
  out += "\n\nTask: " + spec.task;
  out += "\n\nRequirement: " + spec.requirement;
  out += "\n\nStyle Reference: " + spec.styleReference;
  out += "\n\nContext:\n" + spec.contextBlock;
  out += "\n";
  return out;
}

std::optional<ScenarioId> prompt_scenario(std::string_view rendered) {
  constexpr std::string_view tag = "\nScenario: ";
  const auto p = rendered.find(tag);
  if (p == std::string_view::npos) return std::nullopt;
  const auto b = p + tag.size();
  const auto e = rendered.find('\n', b);
  return scenario_from_string(rendered.substr(b, e == std::string_view::npos ? e : e - b));
}

}  // namespace contexta
