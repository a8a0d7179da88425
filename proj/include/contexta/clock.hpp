#pragma once

#include <cstdint>
#include <string>

namespace contexta {

inline constexpr std::int64_t kSecondMs = 1000;
inline constexpr std::int64_t kMinuteMs = 60 * kSecondMs;
inline constexpr std::int64_t kHourMs = 60 * kMinuteMs;
inline constexpr std::int64_t kDayMs = 24 * kHourMs;

/// Days since 1970-01-01 in the proleptic Gregorian calendar.
using LocalDate = std::int64_t;

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

/// Converts between UTC epoch milliseconds and wall-clock time in a fixed
/// offset zone. Traces carry their offset in the header.
class LocalClock {
 public:
  constexpr explicit LocalClock(int tz_offset_minutes = 480)
      : offset_ms_(static_cast<std::int64_t>(tz_offset_minutes) * kMinuteMs) {}

  constexpr int offset_minutes() const {
    return static_cast<int>(offset_ms_ / kMinuteMs);
  }

  constexpr std::int64_t to_local(std::int64_t utc_ms) const {
    return utc_ms + offset_ms_;
  }

  constexpr LocalDate date(std::int64_t utc_ms) const {
    return floor_div(to_local(utc_ms), kDayMs);
  }

  /// Milliseconds since local midnight.
  constexpr std::int64_t time_of_day(std::int64_t utc_ms) const {
    return floor_mod(to_local(utc_ms), kDayMs);
  }

  /// UTC epoch ms of local midnight starting `d`.
  constexpr std::int64_t midnight(LocalDate d) const {
    return d * kDayMs - offset_ms_;
  }

  /// UTC epoch ms of `time_of_day_ms` on local date `d`.
  constexpr std::int64_t at(LocalDate d, std::int64_t time_of_day_ms) const {
    return midnight(d) + time_of_day_ms;
  }

  /// The "night" a moment belongs to: nights run noon to noon and are keyed
  /// by the date of the evening.
  constexpr LocalDate night(std::int64_t utc_ms) const {
    return floor_div(to_local(utc_ms) - 12 * kHourMs, kDayMs);
  }

  /// Monday=0 ... Sunday=6.
  constexpr int weekday(std::int64_t utc_ms) const {
    // 1970-01-01 was a Thursday.
    return static_cast<int>(floor_mod(date(utc_ms) + 3, 7));
  }

 private:
  std::int64_t offset_ms_;
};

constexpr std::int64_t hm(int hours, int minutes = 0) {
  return hours * kHourMs + minutes * kMinuteMs;
}

/// Days since epoch from a civil date (Howard Hinnant's algorithm).
constexpr LocalDate days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<LocalDate>(era) * 146097 + static_cast<LocalDate>(doe) - 719468;
}

/// Parses "YYYY-MM-DD"; throws std::invalid_argument.
LocalDate parse_date(const std::string& iso);
std::string format_date(LocalDate d);
/// "HH:MM" for a time of day in ms.
std::string format_time_of_day(std::int64_t ms_of_day);

}  // namespace contexta
