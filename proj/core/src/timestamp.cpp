#include "rfp/timestamp.hpp"

#include <cstdio>
#include <regex>

namespace rfp {

namespace {

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

}  // namespace

std::optional<TimePoint> parse_rfc3339(std::string_view text) {
  static const std::regex kPattern(
      R"(^(\d{4})-(\d{2})-(\d{2})[Tt ](\d{2}):(\d{2}):(\d{2})(\.(\d+))?([Zz]|([+-])(\d{2}):(\d{2}))$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(text.begin(), text.end(), m, kPattern)) return std::nullopt;
  auto field = [&](int i) { return to_int(std::string_view(&*m[i].first, m[i].length())); };

  int year = field(1), month = field(2), day = field(3);
  int hour = field(4), minute = field(5), second = field(6);
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return std::nullopt;
  if (hour > 23 || minute > 59 || second > 60) return std::nullopt;

  std::chrono::microseconds fraction{0};
  if (m[8].matched) {
    std::string digits(m[8].first, m[8].second);
    digits.resize(6, '0');
    fraction = std::chrono::microseconds(std::stoll(digits.substr(0, 6)));
  }

  std::chrono::minutes offset{0};
  if (m[10].matched) {
    int oh = field(11), om = field(12);
    if (oh > 23 || om > 59) return std::nullopt;
    offset = std::chrono::minutes(oh * 60 + om);
    if (*m[10].first == '-') offset = -offset;
  }

  using namespace std::chrono;
  sys_days date = year_month_day{std::chrono::year(year), std::chrono::month(month),
                                 std::chrono::day(day)};
  auto tp = date + hours(hour) + minutes(minute) + seconds(second) + fraction - offset;
  return time_point_cast<system_clock::duration>(tp);
}

std::string format_rfc3339(TimePoint tp) {
  using namespace std::chrono;
  auto us = time_point_cast<microseconds>(tp);
  auto day = floor<days>(us);
  year_month_day ymd{day};
  hh_mm_ss<microseconds> tod{us - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld.%06ldZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), long(tod.hours().count()),
                long(tod.minutes().count()), long(tod.seconds().count()),
                long(tod.subseconds().count()));
  return buf;
}

}  // namespace rfp
