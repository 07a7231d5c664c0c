#include "readmit/timeutil.hpp"

#include <chrono>
#include <cstdio>

namespace readmit {

namespace {

using namespace std::chrono;

constexpr sys_days kEpoch = sys_days{year{2000} / January / 1};

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

}  // namespace

std::string format_timestamp(Minutes t) {
  Minutes days = t >= 0 ? t / kMinutesPerDay : -((-t + kMinutesPerDay - 1) / kMinutesPerDay);
  Minutes rem = t - days * kMinutesPerDay;
  year_month_day ymd{kEpoch + std::chrono::days{days}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

bool parse_timestamp(std::string_view s, Minutes& out) {
  int y, mo, d, h, mi, sec = 0;
  if (s.size() != 16 && s.size() != 19) return false;
  if (!read_digits(s, 0, 4, y) || s[4] != '-' || !read_digits(s, 5, 2, mo) || s[7] != '-' ||
      !read_digits(s, 8, 2, d) || (s[10] != ' ' && s[10] != 'T') || !read_digits(s, 11, 2, h) ||
      s[13] != ':' || !read_digits(s, 14, 2, mi)) {
    return false;
  }
  if (s.size() == 19 && (s[16] != ':' || !read_digits(s, 17, 2, sec))) return false;
  if (sec != 0 || h > 23 || mi > 59) return false;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return false;
  auto days = (sys_days{ymd} - kEpoch).count();
  out = days * kMinutesPerDay + h * 60 + mi;
  return true;
}

int month_of(Minutes t) {
  Minutes days = t >= 0 ? t / kMinutesPerDay : -((-t + kMinutesPerDay - 1) / kMinutesPerDay);
  year_month_day ymd{kEpoch + std::chrono::days{days}};
  return static_cast<int>(static_cast<unsigned>(ymd.month()));
}

}  // namespace readmit
