#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace contexta {

/// Appends JSON text in a fixed canonical form: keys in call order, no
/// whitespace, integers in decimal, doubles in shortest round-trip form with
/// a trailing ".0" when integral, strings UTF-8 with minimal escaping.
/// Every wire and file record in the project is produced through this.
class JsonLine {
 public:
  JsonLine() { out_.push_back('{'); }

  JsonLine& key(std::string_view k);
  JsonLine& field(std::string_view k, std::string_view v);
  JsonLine& field(std::string_view k, const char* v) { return field(k, std::string_view(v)); }
  JsonLine& field(std::string_view k, const std::string& v) { return field(k, std::string_view(v)); }
  JsonLine& field(std::string_view k, std::int64_t v);
  JsonLine& field(std::string_view k, int v) { return field(k, static_cast<std::int64_t>(v)); }
  JsonLine& field(std::string_view k, double v);
  JsonLine& field(std::string_view k, bool v);
  /// Inserts pre-rendered JSON (an object, array or literal) as the value.
  JsonLine& raw(std::string_view k, std::string_view json);
  JsonLine& null(std::string_view k);

  std::string str() const { return out_ + "}"; }

 private:
  void sep();
  std::string out_;
  bool first_ = true;
};

void append_json_string(std::string& out, std::string_view s);
void append_json_double(std::string& out, double v);
std::string json_string(std::string_view s);
std::string json_double(double v);

}  // namespace contexta
