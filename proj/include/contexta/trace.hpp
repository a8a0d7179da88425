#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contexta/scenario.hpp"
#include "contexta/sensor.hpp"

namespace contexta {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kDefaultTzOffsetMinutes = 480;

struct TraceHeader {
  int schemaVersion = kSchemaVersion;
  std::string userId;
  std::int64_t startTime{};
  std::int64_t endTime{};
  int tzOffsetMinutes = kDefaultTzOffsetMinutes;
  bool operator==(const TraceHeader&) const = default;
};

/// Where, and how often, a scenario is expected to fire.
struct GroundTruthLabel {
  ScenarioId scenarioId{};
  std::int64_t windowStart{};
  std::int64_t windowEnd{};
  std::int64_t expectedTriggerCount = 1;
  bool operator==(const GroundTruthLabel&) const = default;
};

struct Trace {
  TraceHeader header;
  std::vector<SensorEvent> events;
  std::vector<GroundTruthLabel> labels;
};

/// Counters accumulated while parsing.
struct ParseDiagnostics {
  std::size_t unknownFields = 0;
};

/// Parses one event line. `line_no` is only used in error messages.
/// Throws MalformedRecord or SchemaViolation.
SensorEvent parse_event(std::string_view line, std::size_t line_no = 0,
                        ParseDiagnostics* diag = nullptr);
std::string serialize_event(const SensorEvent& e);

TraceHeader parse_header(std::string_view line, std::size_t line_no = 1);
std::string serialize_header(const TraceHeader& h);

GroundTruthLabel parse_label(std::string_view line, std::size_t line_no = 0);
std::string serialize_label(const GroundTruthLabel& l);

/// True when the line is a label record (`"label":true`), checked cheaply.
bool is_label_line(std::string_view line);

/// Incremental reader for line-delimited trace files. The header is read on
/// construction; events are pulled one at a time so large traces never need
/// to be held in memory. Label lines are collected as they are encountered.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in);

  const TraceHeader& header() const { return header_; }
  /// Next event, or nullopt at end of input.
  std::optional<SensorEvent> next();
  const std::vector<GroundTruthLabel>& labels() const { return labels_; }
  const ParseDiagnostics& diagnostics() const { return diag_; }

 private:
  std::istream& in_;
  TraceHeader header_;
  std::vector<GroundTruthLabel> labels_;
  ParseDiagnostics diag_;
  std::size_t line_no_ = 1;
  std::string buf_;
};

Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

class TraceWriter {
 public:
  TraceWriter(std::ostream& out, const TraceHeader& header);
  void write(const SensorEvent& e);
  void write(const GroundTruthLabel& l);

 private:
  std::ostream& out_;
};

void write_trace(std::ostream& out, const Trace& trace);
void write_trace_file(const std::string& path, const Trace& trace);

enum class ViolationKind : std::uint8_t { Ordering, Range, Label };

struct Violation {
  ViolationKind kind;
  std::size_t index;  // event index (label index for Label)
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::array<std::size_t, kChannelCount> channelCounts{};

  bool valid() const { return violations.empty(); }
  std::size_t count(ViolationKind k) const;
};

/// Checks a payload against its documented ranges; returns the offending
/// field name or an empty string.
std::string payload_range_error(const Payload& p, std::string* detail = nullptr);

ValidationReport validate_trace(const Trace& trace);

}  // namespace contexta
