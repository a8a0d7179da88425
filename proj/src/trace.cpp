#include "contexta/trace.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "contexta/error.hpp"
#include "contexta/json_line.hpp"

namespace contexta {

namespace {

using nlohmann::json;

json parse_object(std::string_view line, std::size_t line_no) {
  json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw MalformedRecord(line_no, "<record>", "not valid JSON");
  if (!j.is_object()) throw MalformedRecord(line_no, "<record>", "record is not an object");
  return j;
}

class FieldReader {
 public:
  FieldReader(const json& j, std::size_t line_no) : j_(j), line_(line_no) {}

  const json& require(const char* name) {
    auto it = j_.find(name);
    if (it == j_.end() || it->is_null()) throw SchemaViolation(line_, name, "missing");
    used_.push_back(name);
    return *it;
  }

  const json* optional(const char* name) {
    auto it = j_.find(name);
    if (it == j_.end() || it->is_null()) {
      if (it != j_.end()) used_.push_back(name);
      return nullptr;
    }
    used_.push_back(name);
    return &*it;
  }

  double number(const char* name) {
    const json& v = require(name);
    if (!v.is_number()) throw SchemaViolation(line_, name, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaViolation(line_, name, "not finite");
    return d;
  }

  std::int64_t integer(const char* name) {
    const json& v = require(name);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9.0e15) {
        return static_cast<std::int64_t>(d);
      }
    }
    throw SchemaViolation(line_, name, "expected an integer");
  }

  std::string string(const char* name) {
    const json& v = require(name);
    if (!v.is_string()) throw SchemaViolation(line_, name, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* name) {
    const json& v = require(name);
    if (!v.is_boolean()) throw SchemaViolation(line_, name, "expected a boolean");
    return v.get<bool>();
  }

  template <typename E, typename F>
  E enumeration(const char* name, F&& from_string) {
    std::string s = string(name);
    auto e = from_string(s);
    if (!e) throw SchemaViolation(line_, name, "unknown value '" + s + "'");
    return *e;
  }

  std::size_t unused_count() const {
    std::size_t n = 0;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool seen = false;
      for (const char* u : used_) {
        if (it.key() == u) {
          seen = true;
          break;
        }
      }
      if (!seen) ++n;
    }
    return n;
  }

  std::size_t line() const { return line_; }

 private:
  const json& j_;
  std::size_t line_;
  std::vector<const char*> used_;
};

Payload parse_payload(Channel ch, FieldReader& r) {
  switch (ch) {
    case Channel::Activity:
      return ActivityReading{r.enumeration<ActivityKind>("activity", activity_from_string)};
    case Channel::Accelerometer:
      return Accelerometer{r.number("x"), r.number("y"), r.number("z")};
    case Channel::Battery:
      return Battery{r.number("level")};
    case Channel::BluetoothDevices:
      return BluetoothDevices{r.integer("pcCount"), r.integer("phoneCount")};
    case Channel::BluetoothStatus:
      return BluetoothStatus{r.enumeration<LinkState>("status", link_state_from_string)};
    case Channel::Gyroscope:
      return Gyroscope{r.number("x"), r.number("y"), r.number("z")};
    case Channel::Light:
      return Light{r.number("lightLevel")};
    case Channel::Location: {
      Location loc{r.number("lat"), r.number("long"), std::nullopt};
      if (r.optional("locationType")) {
        loc.locationType =
            r.enumeration<LocationType>("locationType", location_type_from_string);
      }
      return loc;
    }
    case Channel::ScreenStatus:
      return ScreenStatus{
          r.enumeration<ScreenState>("screenStatus", screen_state_from_string)};
    case Channel::WifiStatus:
      return WifiStatus{r.enumeration<LinkState>("status", link_state_from_string)};
    case Channel::Audio: {
      Audio a;
      a.audioDevice = r.string("audioDevice");
      a.isActive = r.boolean("isActive");
      return a;
    }
    case Channel::AppUsage: {
      AppUsage u;
      u.appName = r.string("appName");
      u.packageName = r.string("packageName");
      u.duration = r.integer("duration");
      return u;
    }
    case Channel::ForegroundApp: {
      ForegroundApp f;
      f.packageName = r.string("packageName");
      f.appName = r.string("appName");
      return f;
    }
  }
  throw UnknownChannel("unhandled channel");
}

void append_payload(JsonLine& out, const Payload& p) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ActivityReading>) {
          out.field("activity", to_string(v.activity));
        } else if constexpr (std::is_same_v<T, Accelerometer> || std::is_same_v<T, Gyroscope>) {
          out.field("x", v.x).field("y", v.y).field("z", v.z);
        } else if constexpr (std::is_same_v<T, Battery>) {
          out.field("level", v.level);
        } else if constexpr (std::is_same_v<T, BluetoothDevices>) {
          out.field("pcCount", v.pcCount).field("phoneCount", v.phoneCount);
        } else if constexpr (std::is_same_v<T, BluetoothStatus> || std::is_same_v<T, WifiStatus>) {
          out.field("status", to_string(v.status));
        } else if constexpr (std::is_same_v<T, Light>) {
          out.field("lightLevel", v.lightLevel);
        } else if constexpr (std::is_same_v<T, Location>) {
          out.field("lat", v.lat).field("long", v.lon);
          if (v.locationType) out.field("locationType", to_string(*v.locationType));
        } else if constexpr (std::is_same_v<T, ScreenStatus>) {
          out.field("screenStatus", to_string(v.screenStatus));
        } else if constexpr (std::is_same_v<T, Audio>) {
          out.field("audioDevice", v.audioDevice).field("isActive", v.isActive);
        } else if constexpr (std::is_same_v<T, AppUsage>) {
          out.field("appName", v.appName)
              .field("packageName", v.packageName)
              .field("duration", v.duration);
        } else if constexpr (std::is_same_v<T, ForegroundApp>) {
          out.field("packageName", v.packageName).field("appName", v.appName);
        }
      },
      p);
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

}  // namespace

std::string payload_range_error(const Payload& p, std::string* detail) {
  auto fail = [&](const char* field, const std::string& what) {
    if (detail) *detail = what;
    return std::string(field);
  };
  auto finite3 = [](double x, double y, double z) {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  };
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Accelerometer> || std::is_same_v<T, Gyroscope>) {
          if (!finite3(v.x, v.y, v.z)) return fail("x", "component not finite");
        } else if constexpr (std::is_same_v<T, Battery>) {
          if (!in_range(v.level, 0.0, 100.0)) return fail("level", "level out of [0,100]");
        } else if constexpr (std::is_same_v<T, BluetoothDevices>) {
          if (v.pcCount < 0) return fail("pcCount", "negative count");
          if (v.phoneCount < 0) return fail("phoneCount", "negative count");
        } else if constexpr (std::is_same_v<T, Light>) {
          if (!(v.lightLevel >= 0.0) || !std::isfinite(v.lightLevel)) {
            return fail("lightLevel", "lux must be >= 0");
          }
        } else if constexpr (std::is_same_v<T, Location>) {
          if (!in_range(v.lat, -90.0, 90.0)) return fail("lat", "latitude out of [-90,90]");
          if (!in_range(v.lon, -180.0, 180.0)) return fail("long", "longitude out of [-180,180]");
        } else if constexpr (std::is_same_v<T, AppUsage>) {
          if (v.duration < 0 || v.duration > kAppUsageIntervalSeconds) {
            return fail("duration", "duration out of [0," +
                                        std::to_string(kAppUsageIntervalSeconds) + "] s");
          }
        }
        return {};
      },
      p);
}

SensorEvent parse_event(std::string_view line, std::size_t line_no, ParseDiagnostics* diag) {
  json j = parse_object(line, line_no);
  FieldReader r(j, line_no);
  SensorEvent e;
  e.timestamp = r.integer("t");
  if (e.timestamp <= 0) throw SchemaViolation(line_no, "t", "timestamp must be > 0");
  std::string ch_name = r.string("ch");
  auto ch = channel_from_string(ch_name);
  if (!ch) throw SchemaViolation(line_no, "ch", "unknown channel '" + ch_name + "'");
  e.payload = parse_payload(*ch, r);
  std::string detail;
  std::string bad = payload_range_error(e.payload, &detail);
  if (!bad.empty()) throw SchemaViolation(line_no, bad, detail);
  if (diag) diag->unknownFields += r.unused_count();
  return e;
}

std::string serialize_event(const SensorEvent& e) {
  JsonLine out;
  out.field("t", e.timestamp).field("ch", to_string(e.channel()));
  append_payload(out, e.payload);
  return out.str();
}

TraceHeader parse_header(std::string_view line, std::size_t line_no) {
  json j = parse_object(line, line_no);
  FieldReader r(j, line_no);
  TraceHeader h;
  h.schemaVersion = static_cast<int>(r.integer("schemaVersion"));
  if (h.schemaVersion != kSchemaVersion) {
    throw SchemaViolation(line_no, "schemaVersion",
                          "unsupported version " + std::to_string(h.schemaVersion));
  }
  h.userId = r.string("userId");
  h.startTime = r.integer("startTime");
  h.endTime = r.integer("endTime");
  if (r.optional("tzOffsetMinutes")) {
    h.tzOffsetMinutes = static_cast<int>(r.integer("tzOffsetMinutes"));
  }
  if (h.tzOffsetMinutes < -14 * 60 || h.tzOffsetMinutes > 14 * 60) {
    throw SchemaViolation(line_no, "tzOffsetMinutes", "offset out of range");
  }
  if (h.endTime < h.startTime) throw SchemaViolation(line_no, "endTime", "endTime < startTime");
  return h;
}

std::string serialize_header(const TraceHeader& h) {
  return JsonLine()
      .field("schemaVersion", h.schemaVersion)
      .field("userId", h.userId)
      .field("startTime", h.startTime)
      .field("endTime", h.endTime)
      .field("tzOffsetMinutes", h.tzOffsetMinutes)
      .str();
}

GroundTruthLabel parse_label(std::string_view line, std::size_t line_no) {
  json j = parse_object(line, line_no);
  FieldReader r(j, line_no);
  if (!r.boolean("label")) throw SchemaViolation(line_no, "label", "expected true");
  GroundTruthLabel l;
  l.scenarioId = r.enumeration<ScenarioId>("scenarioId", scenario_from_string);
  l.windowStart = r.integer("windowStart");
  l.windowEnd = r.integer("windowEnd");
  l.expectedTriggerCount = r.integer("expectedTriggerCount");
  if (l.windowStart >= l.windowEnd) {
    throw SchemaViolation(line_no, "windowEnd", "windowStart must precede windowEnd");
  }
  if (l.expectedTriggerCount < 1) {
    throw SchemaViolation(line_no, "expectedTriggerCount", "must be positive");
  }
  return l;
}

std::string serialize_label(const GroundTruthLabel& l) {
  return JsonLine()
      .field("label", true)
      .field("scenarioId", to_string(l.scenarioId))
      .field("windowStart", l.windowStart)
      .field("windowEnd", l.windowEnd)
      .field("expectedTriggerCount", l.expectedTriggerCount)
      .str();
}

bool is_label_line(std::string_view line) {
  return line.find("\"label\":true") != std::string_view::npos ||
         line.find("\"label\": true") != std::string_view::npos;
}

TraceReader::TraceReader(std::istream& in) : in_(in) {
  if (!std::getline(in_, buf_)) throw MalformedRecord(1, "<header>", "empty trace");
  header_ = parse_header(buf_, 1);
}

std::optional<SensorEvent> TraceReader::next() {
  while (std::getline(in_, buf_)) {
    ++line_no_;
    if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();
    if (buf_.empty()) continue;
    if (is_label_line(buf_)) {
      labels_.push_back(parse_label(buf_, line_no_));
      continue;
    }
    return parse_event(buf_, line_no_, &diag_);
  }
  return std::nullopt;
}

Trace read_trace(std::istream& in) {
  TraceReader reader(in);
  Trace t;
  t.header = reader.header();
  while (auto e = reader.next()) t.events.push_back(std::move(*e));
  t.labels = reader.labels();
  return t;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open trace '" + path + "'");
  return read_trace(in);
}

TraceWriter::TraceWriter(std::ostream& out, const TraceHeader& header) : out_(out) {
  out_ << serialize_header(header) << '\n';
}

void TraceWriter::write(const SensorEvent& e) { out_ << serialize_event(e) << '\n'; }

void TraceWriter::write(const GroundTruthLabel& l) { out_ << serialize_label(l) << '\n'; }

void write_trace(std::ostream& out, const Trace& trace) {
  TraceWriter w(out, trace.header);
  for (const auto& e : trace.events) w.write(e);
  for (const auto& l : trace.labels) w.write(l);
}

void write_trace_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write trace '" + path + "'");
  write_trace(out, trace);
  if (!out) throw Error("IoError", "write failed for '" + path + "'");
}

std::size_t ValidationReport::count(ViolationKind k) const {
  std::size_t n = 0;
  for (const auto& v : violations) n += v.kind == k;
  return n;
}

ValidationReport validate_trace(const Trace& trace) {
  ValidationReport report;
  const auto& h = trace.header;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    report.channelCounts[static_cast<std::size_t>(e.channel())]++;
    if (i > 0 && e.timestamp < trace.events[i - 1].timestamp) {
      report.violations.push_back({ViolationKind::Ordering, i,
                                   "timestamp " + std::to_string(e.timestamp) +
                                       " precedes previous " +
                                       std::to_string(trace.events[i - 1].timestamp)});
    }
    if (e.timestamp <= 0 || e.timestamp < h.startTime || e.timestamp > h.endTime) {
      report.violations.push_back({ViolationKind::Range, i,
                                   "timestamp " + std::to_string(e.timestamp) +
                                       " outside trace bounds"});
    }
    std::string detail;
    std::string bad = payload_range_error(e.payload, &detail);
    if (!bad.empty()) {
      report.violations.push_back({ViolationKind::Range, i, bad + ": " + detail});
    }
  }
  for (std::size_t i = 0; i < trace.labels.size(); ++i) {
    const auto& l = trace.labels[i];
    if (l.windowStart >= l.windowEnd || l.expectedTriggerCount < 1) {
      report.violations.push_back({ViolationKind::Label, i, "malformed label window/count"});
    }
  }
  return report;
}

}  // namespace contexta
