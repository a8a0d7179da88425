#include "contexta/signals.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace contexta {

double haversine_km(GeoPoint a, GeoPoint b) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

template <typename T>
void opt(std::ostream& os, const char* name, const std::optional<T>& v) {
  os << ' ' << name << '=';
  if (v) {
    os << *v;
  } else {
    os << '-';
  }
}

std::ostream& operator<<(std::ostream& os, const GeoPoint& p) {
  return os << '(' << p.lat << ',' << p.lon << ')';
}

}  // namespace

std::ostream& operator<<(std::ostream& os, const Signals& s) {
  os << "now=" << s.now << " date=" << s.date << " tod=" << s.timeOfDay << " night=" << s.night;
  os << " activity=";
  if (s.activity) {
    os << to_string(*s.activity);
  } else {
    os << '-';
  }
  os << " walk15=" << s.walkingMs15 << " run10=" << s.runningMs10 << " bout=" << s.runningBoutMs
     << " still=" << s.stillStreakMs << " vigorous=" << s.vigorousStreakMs;
  os << " screenKnown=" << s.screenKnown << " on=" << s.screenOn << " offMs=" << s.screenOffMs
     << " justOn=" << s.justTurnedOn << " priorOff=" << s.priorOffMs
     << " gap90=" << s.longestOffGap90Ms << " episodes=" << s.insomniaEpisodes
     << " firstEpisode=" << s.firstInsomniaEpisodeAt << " on10=" << s.screenOnWithin10;
  opt(os, "lux", s.lightLux);
  os << " fix=" << s.hasFix << " label=";
  if (s.locationLabel) {
    os << to_string(*s.locationLabel);
  } else {
    os << '-';
  }
  os << " fresh=" << s.locationFresh << " dwellStart=" << s.dwellStart
     << " lastFixAt=" << s.lastFixAt << " dwell=" << s.dwellMs << " leftWork=" << s.justLeftWork
     << " workToday=" << s.workPresenceTodayMs << " firstWork=" << s.firstWorkFixToday;
  opt(os, "home", s.homeAnchor);
  opt(os, "work", s.workAnchor);
  opt(os, "lastFix", s.lastFix);
  os << " social=" << s.socialTonightMs << " video=" << s.videoRunActive << '@' << s.videoRunStart
     << " audioFresh=" << s.audioFresh << " audioActive=" << s.audioActive << '@'
     << s.audioRunStart << '+' << s.audioRunMs;
  return os;
}

}  // namespace contexta
