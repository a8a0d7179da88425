#include "contexta/sensor.hpp"

#include <algorithm>

namespace contexta {

namespace {

constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "activity",   "accelerometer", "battery",    "bluetoothDevices", "bluetoothStatus",
    "gyroscope",  "light",         "location",   "screenStatus",     "wifiStatus",
    "audio",      "appUsage",      "foregroundApp"};

// Activity is a classifier output over motion sensors; it is stored as
// Hardware because its source is the IMU.
constexpr std::array<Taxonomy, kChannelCount> kTaxonomy = {
    Taxonomy::Hardware,  // Activity
    Taxonomy::Hardware,  // Accelerometer
    Taxonomy::Software,  // Battery
    Taxonomy::Software,  // BluetoothDevices
    Taxonomy::Software,  // BluetoothStatus
    Taxonomy::Hardware,  // Gyroscope
    Taxonomy::Hardware,  // Light
    Taxonomy::Context,   // Location
    Taxonomy::Context,   // ScreenStatus
    Taxonomy::Software,  // WifiStatus
    Taxonomy::Software,  // Audio
    Taxonomy::Software,  // AppUsage
    Taxonomy::Software,  // ForegroundApp
};

constexpr std::array<std::string_view, kActivityKindCount> kActivityNames = {
    "walking", "running", "cycling", "still"};
constexpr std::array<std::string_view, 2> kLinkNames = {"connected", "disconnected"};
constexpr std::array<std::string_view, 3> kScreenNames = {"on", "off", "unlocked"};
constexpr std::array<std::string_view, kLocationTypeCount> kLocationNames = {
    "home", "work", "restaurant", "transit", "other"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  auto it = std::find(names.begin(), names.end(), s);
  if (it == names.end()) return std::nullopt;
  return static_cast<E>(it - names.begin());
}

}  // namespace

Taxonomy taxonomy_of(Channel c) { return kTaxonomy.at(static_cast<std::size_t>(c)); }

std::string_view to_string(Channel c) { return kChannelNames.at(static_cast<std::size_t>(c)); }

std::string_view to_string(Taxonomy t) {
  switch (t) {
    case Taxonomy::Hardware: return "hardware";
    case Taxonomy::Software: return "software";
    case Taxonomy::Context: return "context";
  }
  return "?";
}

std::string_view to_string(ActivityKind a) {
  return kActivityNames.at(static_cast<std::size_t>(a));
}
std::string_view to_string(LinkState s) { return kLinkNames.at(static_cast<std::size_t>(s)); }
std::string_view to_string(ScreenState s) {
  return kScreenNames.at(static_cast<std::size_t>(s));
}
std::string_view to_string(LocationType t) {
  return kLocationNames.at(static_cast<std::size_t>(t));
}

std::optional<Channel> channel_from_string(std::string_view s) {
  return lookup<Channel>(kChannelNames, s);
}
std::optional<ActivityKind> activity_from_string(std::string_view s) {
  return lookup<ActivityKind>(kActivityNames, s);
}
std::optional<LinkState> link_state_from_string(std::string_view s) {
  return lookup<LinkState>(kLinkNames, s);
}
std::optional<ScreenState> screen_state_from_string(std::string_view s) {
  return lookup<ScreenState>(kScreenNames, s);
}
std::optional<LocationType> location_type_from_string(std::string_view s) {
  return lookup<LocationType>(kLocationNames, s);
}

}  // namespace contexta
