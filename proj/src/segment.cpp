#include "contexta/segment.hpp"

#include <algorithm>
#include <array>

#include "contexta/error.hpp"

namespace contexta {

namespace {

// Byte length of the code point starting at s[i].
std::size_t cp_len(std::string_view s, std::size_t i) {
  const auto b = static_cast<unsigned char>(s[i]);
  std::size_t n = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 1;
  if (i + n > s.size()) return 1;
  for (std::size_t k = 1; k < n; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 1;
  }
  return n;
}

bool one_of(std::string_view cp, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), cp) != set.end();
}

bool is_terminator(std::string_view cp) {
  return one_of(cp, {".", "!", "?", ";", "\xE3\x80\x82" /*。*/, "\xEF\xBC\x81" /*！*/,
                     "\xEF\xBC\x9F" /*？*/, "\xEF\xBC\x9B" /*；*/, "\xE2\x80\xA6" /*…*/});
}

bool is_separator(std::string_view cp) {
  return one_of(cp, {",", ":", "\xEF\xBC\x8C" /*，*/, "\xE3\x80\x81" /*、*/, "\xEF\xBC\x9A" /*：*/});
}

bool is_closer(std::string_view cp) {
  return one_of(cp, {"\"", "'", ")", "]", "\xE2\x80\x9D" /*”*/, "\xE2\x80\x99" /*’*/,
                     "\xEF\xBC\x89" /*）*/, "\xE3\x80\x8D" /*」*/, "\xE3\x80\x8F" /*』*/});
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct Piece {
  std::size_t begin, end;  // bytes
  bool join;               // one space consumed after this piece
};

// Cuts [begin, end) after every boundary cluster accepted by `boundary`.
// Whitespace after a boundary stays with the left piece, except that a final
// ASCII space is consumed as the join.
template <class Boundary>
std::vector<Piece> cut(std::string_view s, std::size_t begin, std::size_t end, Boundary boundary) {
  std::vector<Piece> out;
  std::size_t start = begin;
  std::size_t i = begin;
  while (i < end) {
    const std::size_t n = cp_len(s, i);
    if (!boundary(s, i, n)) {
      i += n;
      continue;
    }
    i += n;
    // absorb runs of terminators / separators and closing quotes
    while (i < end) {
      const std::size_t m = cp_len(s, i);
      const auto cp = s.substr(i, m);
      if (boundary(s, i, m) || is_closer(cp)) i += m;
      else break;
    }
    std::size_t ws = i;
    while (ws < end && is_space(s[ws])) ++ws;
    if (ws == end) break;  // trailing whitespace belongs to the last piece
    if (ws > i && s[ws - 1] == ' ') {
      out.push_back({start, ws - 1, true});
    } else {
      out.push_back({start, ws, false});
    }
    start = ws;
    i = ws;
  }
  out.push_back({start, end, false});
  return out;
}

std::size_t cps(std::string_view s, std::size_t a, std::size_t b) { return utf8_length(s.substr(a, b - a)); }

// Splits [begin, end) into pieces of at most max_len code points, preferring
// to break at a space (which is then consumed).
void hard_split(std::string_view s, std::size_t begin, std::size_t end, bool last_join,
                std::size_t max_len, std::vector<Piece>& out) {
  std::size_t start = begin;
  while (cps(s, start, end) > max_len) {
    std::size_t i = start;
    std::size_t count = 0;
    std::size_t lastSpace = std::string_view::npos;
    while (count < max_len) {
      i += cp_len(s, i);
      ++count;
      if (i < end && s[i] == ' ' && count >= max_len / 2) lastSpace = i;
    }
    // s[i] may itself be a space right at the limit
    if (i < end && s[i] == ' ') lastSpace = i;
    if (lastSpace != std::string_view::npos && lastSpace + 1 < end) {
      out.push_back({start, lastSpace, true});
      start = lastSpace + 1;
    } else {
      out.push_back({start, i, false});
      start = i;
    }
  }
  out.push_back({start, end, last_join});
}

}  // namespace

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); i += cp_len(s, i)) ++n;
  return n;
}

Segmentation segment(std::string_view text, std::size_t max_len) {
  if (max_len < kMinMaxSegment) {
    throw BadConfig("maxSegmentLength must be at least " + std::to_string(kMinMaxSegment));
  }
  Segmentation out;
  if (text.empty()) return out;

  auto sentence_end = [](std::string_view s, std::size_t i, std::size_t n) {
    const auto cp = s.substr(i, n);
    if (!is_terminator(cp)) return false;
    // decimal point
    if (cp == "." && i > 0 && i + 1 < s.size() && is_digit(s[i - 1]) && is_digit(s[i + 1])) return false;
    return true;
  };
  auto clause_end = [](std::string_view s, std::size_t i, std::size_t n) {
    const auto cp = s.substr(i, n);
    if (!is_separator(cp)) return false;
    if (cp == "," && i > 0 && i + 1 < s.size() && is_digit(s[i - 1]) && is_digit(s[i + 1])) return false;
    return true;
  };

  std::vector<Piece> pieces;
  for (const auto& sent : cut(text, 0, text.size(), sentence_end)) {
    if (cps(text, sent.begin, sent.end) <= max_len) {
      pieces.push_back(sent);
      continue;
    }
    // pack clauses greedily
    const auto clauses = cut(text, sent.begin, sent.end, clause_end);
    std::size_t k = 0;
    while (k < clauses.size()) {
      std::size_t j = k;
      while (j + 1 < clauses.size() && cps(text, clauses[k].begin, clauses[j + 1].end) <= max_len) ++j;
      const bool join = j + 1 < clauses.size() ? clauses[j].join : sent.join;
      hard_split(text, clauses[k].begin, clauses[j].end, join, max_len, pieces);
      k = j + 1;
    }
  }
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    out.segments.emplace_back(text.substr(pieces[i].begin, pieces[i].end - pieces[i].begin));
    if (i + 1 < pieces.size()) out.joins.push_back(pieces[i].join);
  }
  return out;
}

std::string reconstruct(const Segmentation& s) {
  std::string out;
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    out += s.segments[i];
    if (i < s.joins.size() && s.joins[i]) out += ' ';
  }
  return out;
}

}  // namespace contexta
