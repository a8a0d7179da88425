#include "contexta/app_categories.hpp"

#include <algorithm>

namespace contexta {

namespace {
constexpr std::array<std::string_view, kAppCategoryCount> kNames = {
    "social", "video", "music", "reading", "productivity", "other"};
}

std::string_view to_string(AppCategory c) { return kNames.at(static_cast<std::size_t>(c)); }

std::optional<AppCategory> app_category_from_string(std::string_view s) {
  auto it = std::find(kNames.begin(), kNames.end(), s);
  if (it == kNames.end()) return std::nullopt;
  return static_cast<AppCategory>(it - kNames.begin());
}

const AppCategoryMap& AppCategoryMap::defaults() {
  static const AppCategoryMap m = [] {
    AppCategoryMap out;
    for (auto p : {"com.ss.android.ugc.aweme", "com.zhiliaoapp.musically", "com.sina.weibo",
                   "com.tencent.mm", "com.instagram.android", "com.xingin.xhs",
                   "com.twitter.android", "com.facebook.katana"}) {
      out.set(p, AppCategory::Social);
    }
    for (auto p : {"tv.danmaku.bili", "com.youku.phone", "com.netflix.mediaclient",
                   "com.google.android.youtube", "com.tencent.qqlive"}) {
      out.set(p, AppCategory::Video);
    }
    for (auto p : {"com.netease.cloudmusic", "com.spotify.music", "com.tencent.qqmusic"}) {
      out.set(p, AppCategory::Music);
    }
    for (auto p : {"com.amazon.kindle", "com.example.storytime", "com.qidian.QDReader"}) {
      out.set(p, AppCategory::Reading);
    }
    for (auto p : {"com.example.notes", "com.microsoft.office.outlook", "com.alibaba.android.rimet",
                   "com.google.android.calendar"}) {
      out.set(p, AppCategory::Productivity);
    }
    return out;
  }();
  return m;
}

AppCategory AppCategoryMap::category(std::string_view package) const {
  auto it = map_.find(package);
  return it == map_.end() ? AppCategory::Other : it->second;
}

}  // namespace contexta
