#include "contexta/clock.hpp"

#include <cstdio>
#include <stdexcept>

namespace contexta {

LocalDate parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(iso.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3 || m < 1 || m > 12 ||
      d < 1 || d > 31) {
    throw std::invalid_argument("bad date '" + iso + "', expected YYYY-MM-DD");
  }
  return days_from_civil(y, m, d);
}

std::string format_date(LocalDate z) {
  // Inverse of days_from_civil.
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y0 = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t y = y0 + (m <= 2);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", static_cast<long long>(y), m, d);
  return buf;
}

std::string format_time_of_day(std::int64_t ms) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld", static_cast<long long>(ms / kHourMs),
                static_cast<long long>((ms % kHourMs) / kMinuteMs));
  return buf;
}

}  // namespace contexta
