#include "contexta/json_line.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace contexta {

void append_json_string(std::string& out, std::string_view s) {
  static constexpr char kHex[] = "0123456789abcdef";
  out.push_back('"');
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          out += "\\u00";
          out.push_back(kHex[c >> 4]);
          out.push_back(kHex[c & 0xF]);
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
}

void append_json_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite number in JSON output");
  if (v == 0.0) v = 0.0;  // fold -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string_view s(buf, static_cast<std::size_t>(end - buf));
  out.append(s);
  if (s.find_first_of(".eE") == std::string_view::npos) out += ".0";
}

std::string json_string(std::string_view s) {
  std::string out;
  append_json_string(out, s);
  return out;
}

std::string json_double(double v) {
  std::string out;
  append_json_double(out, v);
  return out;
}

void JsonLine::sep() {
  if (!first_) out_.push_back(',');
  first_ = false;
}

JsonLine& JsonLine::key(std::string_view k) {
  sep();
  append_json_string(out_, k);
  out_.push_back(':');
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, std::string_view v) {
  key(k);
  append_json_string(out_, v);
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, std::int64_t v) {
  key(k);
  out_ += std::to_string(v);
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, double v) {
  key(k);
  append_json_double(out_, v);
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, bool v) {
  key(k);
  out_ += v ? "true" : "false";
  return *this;
}

JsonLine& JsonLine::raw(std::string_view k, std::string_view json) {
  key(k);
  out_.append(json);
  return *this;
}

JsonLine& JsonLine::null(std::string_view k) {
  key(k);
  out_ += "null";
  return *this;
}

}  // namespace contexta
