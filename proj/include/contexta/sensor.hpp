#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace contexta {

/// The 13 collection channels. Order is significant: it is the variant index
/// of `Payload` and the tie-break order for events sharing a timestamp.
enum class Channel : std::uint8_t {
  Activity,
  Accelerometer,
  Battery,
  BluetoothDevices,
  BluetoothStatus,
  Gyroscope,
  Light,
  Location,
  ScreenStatus,
  WifiStatus,
  Audio,
  AppUsage,
  ForegroundApp,
};
inline constexpr std::size_t kChannelCount = 13;

enum class Taxonomy : std::uint8_t { Hardware, Software, Context };

enum class ActivityKind : std::uint8_t { Walking, Running, Cycling, Still };
inline constexpr std::size_t kActivityKindCount = 4;

enum class LinkState : std::uint8_t { Connected, Disconnected };
enum class ScreenState : std::uint8_t { On, Off, Unlocked };
enum class LocationType : std::uint8_t { Home, Work, Restaurant, Transit, Other };
inline constexpr std::size_t kLocationTypeCount = 5;

constexpr bool is_on(ScreenState s) { return s != ScreenState::Off; }

struct ActivityReading {
  ActivityKind activity{};
  bool operator==(const ActivityReading&) const = default;
};

/// m/s^2, gravity included.
struct Accelerometer {
  double x{}, y{}, z{};
  bool operator==(const Accelerometer&) const = default;
};

struct Battery {
  double level{};  // percent
  bool operator==(const Battery&) const = default;
};

struct BluetoothDevices {
  std::int64_t pcCount{};
  std::int64_t phoneCount{};
  bool operator==(const BluetoothDevices&) const = default;
};

struct BluetoothStatus {
  LinkState status{};
  bool operator==(const BluetoothStatus&) const = default;
};

/// rad/s.
struct Gyroscope {
  double x{}, y{}, z{};
  bool operator==(const Gyroscope&) const = default;
};

struct Light {
  double lightLevel{};  // lux
  bool operator==(const Light&) const = default;
};

struct Location {
  double lat{};
  double lon{};
  std::optional<LocationType> locationType;
  bool operator==(const Location&) const = default;
};

struct ScreenStatus {
  ScreenState screenStatus{};
  bool operator==(const ScreenStatus&) const = default;
};

struct WifiStatus {
  LinkState status{};
  bool operator==(const WifiStatus&) const = default;
};

struct Audio {
  std::string audioDevice;
  bool isActive{};
  bool operator==(const Audio&) const = default;
};

/// Usage accumulated by one app during one reporting interval.
struct AppUsage {
  std::string appName;
  std::string packageName;
  std::int64_t duration{};  // seconds
  bool operator==(const AppUsage&) const = default;
};

struct ForegroundApp {
  std::string packageName;
  std::string appName;
  bool operator==(const ForegroundApp&) const = default;
};

using Payload = std::variant<ActivityReading, Accelerometer, Battery, BluetoothDevices,
                             BluetoothStatus, Gyroscope, Light, Location, ScreenStatus,
                             WifiStatus, Audio, AppUsage, ForegroundApp>;
static_assert(std::variant_size_v<Payload> == kChannelCount);

/// AppUsage and ForegroundApp are polled on this interval; a usage record
/// never reports more than one interval's worth of time.
inline constexpr std::int64_t kAppUsageIntervalSeconds = 30;

struct SensorEvent {
  std::int64_t timestamp{};  // epoch ms, UTC
  Payload payload;

  Channel channel() const { return static_cast<Channel>(payload.index()); }
  bool operator==(const SensorEvent&) const = default;
};

Taxonomy taxonomy_of(Channel c);
inline Taxonomy taxonomy_of(const SensorEvent& e) { return taxonomy_of(e.channel()); }

std::string_view to_string(Channel c);
std::string_view to_string(Taxonomy t);
std::string_view to_string(ActivityKind a);
std::string_view to_string(LinkState s);
std::string_view to_string(ScreenState s);
std::string_view to_string(LocationType t);

std::optional<Channel> channel_from_string(std::string_view s);
std::optional<ActivityKind> activity_from_string(std::string_view s);
std::optional<LinkState> link_state_from_string(std::string_view s);
std::optional<ScreenState> screen_state_from_string(std::string_view s);
std::optional<LocationType> location_type_from_string(std::string_view s);

inline constexpr std::array<Channel, kChannelCount> kAllChannels = {
    Channel::Activity,     Channel::Accelerometer, Channel::Battery,
    Channel::BluetoothDevices, Channel::BluetoothStatus, Channel::Gyroscope,
    Channel::Light,        Channel::Location,      Channel::ScreenStatus,
    Channel::WifiStatus,   Channel::Audio,         Channel::AppUsage,
    Channel::ForegroundApp};

}  // namespace contexta
