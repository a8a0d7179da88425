#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace contexta {

inline constexpr std::size_t kDefaultMaxSegment = 120;
inline constexpr std::size_t kMinMaxSegment = 20;

struct Segmentation {
  std::vector<std::string> segments;
  /// joins[i]: one space was consumed between segments i and i+1.
  std::vector<bool> joins;
};

/// Splits at sentence terminators (. ! ? ; and the full-width forms), then at
/// clause separators for sentences longer than `max_len` code points, then
/// hard-splits whatever is still too long. Lossless: reconstruct() returns
/// the input. Throws BadConfig when max_len < 20.
Segmentation segment(std::string_view text, std::size_t max_len = kDefaultMaxSegment);
std::string reconstruct(const Segmentation& s);

/// Number of UTF-8 code points; stray continuation bytes count as one each.
std::size_t utf8_length(std::string_view s);

}  // namespace contexta
