#include "driftsgd/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "driftsgd/errors.hpp"

namespace driftsgd {

using namespace std::chrono;

namespace {

bool parse_uint(std::string_view s, unsigned& out) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool build(unsigned y, unsigned m, unsigned d, unsigned h, Timestamp& out) {
  const year_month_day ymd{year{static_cast<int>(y)}, month{m}, day{d}};
  if (!ymd.ok() || h > 23) return false;
  out = sys_days{ymd} + hours{h};
  return true;
}

}  // namespace

YearMonth YearMonth::next() const {
  return month == 12 ? YearMonth{year + 1, 1} : YearMonth{year, month + 1};
}

int YearMonth::months_until(const YearMonth& later) const {
  return (later.year - year) * 12 + static_cast<int>(later.month) - static_cast<int>(month);
}

Timestamp YearMonth::first_hour() const {
  return sys_days{std::chrono::year{year} / std::chrono::month{month} / 1};
}

unsigned YearMonth::days() const {
  const year_month_day_last last{std::chrono::year{year}, month_day_last{std::chrono::month{month}}};
  return static_cast<unsigned>(last.day());
}

std::string YearMonth::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
  return buf;
}

YearMonth YearMonth::parse(std::string_view text) {
  unsigned y = 0, m = 0;
  if (text.size() != 7 || text[4] != '-' || !parse_uint(text.substr(0, 4), y) ||
      !parse_uint(text.substr(5, 2), m) || m < 1 || m > 12)
    throw ConfigError("expected YYYY-MM, got '" + std::string(text) + "'");
  return {static_cast<int>(y), m};
}

Timestamp make_timestamp(int y, unsigned m, unsigned d, unsigned h) {
  Timestamp ts;
  if (y < 0 || !build(static_cast<unsigned>(y), m, d, h, ts)) throw ConfigError("invalid calendar date");
  return ts;
}

YearMonth year_month_of(Timestamp ts) {
  const year_month_day ymd{floor<days>(ts)};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
}

int hour_of_day(Timestamp ts) {
  return static_cast<int>((ts - floor<days>(ts)).count());
}

int weekday_index(Timestamp ts) {
  // iso_encoding: Monday = 1 .. Sunday = 7
  return static_cast<int>(weekday{floor<days>(ts)}.iso_encoding()) - 1;
}

int month_index(Timestamp ts) { return static_cast<int>(year_month_of(ts).month) - 1; }

bool parse_timestamp(std::string_view s, Timestamp& out) {
  unsigned y = 0, m = 0, d = 0, h = 0;
  // YYYYMMDD HH
  if (s.size() == 11 && s[8] == ' ') {
    return parse_uint(s.substr(0, 4), y) && parse_uint(s.substr(4, 2), m) &&
           parse_uint(s.substr(6, 2), d) && parse_uint(s.substr(9, 2), h) && build(y, m, d, h, out);
  }
  // YYYY-MM-DD[T ]HH:MM[:SS]
  if ((s.size() == 16 || s.size() == 19) && s[4] == '-' && s[7] == '-' &&
      (s[10] == 'T' || s[10] == ' ') && s[13] == ':') {
    unsigned mi = 0, sec = 0;
    if (!parse_uint(s.substr(0, 4), y) || !parse_uint(s.substr(5, 2), m) ||
        !parse_uint(s.substr(8, 2), d) || !parse_uint(s.substr(11, 2), h) ||
        !parse_uint(s.substr(14, 2), mi))
      return false;
    if (s.size() == 19 && (s[16] != ':' || !parse_uint(s.substr(17, 2), sec))) return false;
    if (mi != 0 || sec != 0) return false;
    return build(y, m, d, h, out);
  }
  return false;
}

std::string format_timestamp(Timestamp ts) {
  const year_month_day ymd{floor<days>(ts)};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day(ts));
  return buf;
}

}  // namespace driftsgd
