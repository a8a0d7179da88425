#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace contexta {

enum class AppCategory : std::uint8_t { Social, Video, Music, Reading, Productivity, Other };
inline constexpr std::size_t kAppCategoryCount = 6;

std::string_view to_string(AppCategory c);
std::optional<AppCategory> app_category_from_string(std::string_view s);

/// packageName -> category. Lookups never fail: unknown packages are Other.
class AppCategoryMap {
 public:
  /// The bundled map of common packages.
  static const AppCategoryMap& defaults();

  AppCategoryMap() = default;
  void set(std::string package, AppCategory c) { map_[std::move(package)] = c; }
  AppCategory category(std::string_view package) const;
  std::size_t size() const { return map_.size(); }

 private:
  std::map<std::string, AppCategory, std::less<>> map_;
};

}  // namespace contexta
