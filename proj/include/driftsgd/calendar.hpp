#pragma once

// Hour-resolution timestamps and the calendar fields the feature encoder uses.

#include <chrono>
#include <string>
#include <string_view>

namespace driftsgd {

using Timestamp = std::chrono::sys_time<std::chrono::hours>;

/// Calendar month, e.g. {2010, 10}.
struct YearMonth {
  int year = 0;
  unsigned month = 1;  // 1..12

  auto operator<=>(const YearMonth&) const = default;

  YearMonth next() const;
  /// Months from `*this` to `later` (negative if `later` is earlier).
  int months_until(const YearMonth& later) const;
  Timestamp first_hour() const;
  unsigned days() const;
  std::string to_string() const;  // "YYYY-MM"
  static YearMonth parse(std::string_view text);
};

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour);

YearMonth year_month_of(Timestamp ts);
int hour_of_day(Timestamp ts);    // 0..23
int weekday_index(Timestamp ts);  // Monday = 0 .. Sunday = 6
int month_index(Timestamp ts);    // January = 0 .. December = 11

/// Accepts "YYYYMMDD HH", "YYYY-MM-DDTHH:MM[:SS]" and "YYYY-MM-DD HH:MM[:SS]".
/// Minutes and seconds must be zero. Returns false on any other input.
bool parse_timestamp(std::string_view text, Timestamp& out);

/// ISO-8601 "YYYY-MM-DDTHH:00".
std::string format_timestamp(Timestamp ts);

}  // namespace driftsgd
