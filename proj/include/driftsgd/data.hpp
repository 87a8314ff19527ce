#pragma once

// Hourly load series: GEFCom-style CSV ingestion, monthly chunking, the
// train/test protocol split, and a synthetic drifting-demand generator.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftsgd/calendar.hpp"

namespace driftsgd::data {

inline constexpr std::size_t kStations = 25;

struct HourlyRecord {
  Timestamp timestamp;
  double load = 0.0;
  bool load_missing = false;
  std::array<double, kStations> temps{};  // NaN where the source has none

  bool operator==(const HourlyRecord& other) const;
};

using Series = std::vector<HourlyRecord>;

struct LoadResult {
  Series records;
  std::size_t missing_loads = 0;
};

/// Parses a comma-separated file whose header names a timestamp column
/// (TIMESTAMP or timestamp), a load column (LOAD or load) and optionally
/// temperature columns w1..w25; other columns (ZONEID) are ignored.
/// Timestamps may be "YYYYMMDD HH" or ISO-8601 at whole hours. An empty or
/// unparseable load marks the record missing. Throws FormatError (with the
/// line) for a bad header or timestamp, DataError when timestamps do not
/// strictly increase.
LoadResult read_gefcom_csv(std::istream& in);
LoadResult load_gefcom_csv(const std::filesystem::path& path);

/// Canonical series CSV: header "timestamp,load,w1,...,w25", ISO timestamps,
/// empty cells for missing values, doubles in shortest round-trip form.
void write_series_csv(std::ostream& out, std::span<const HourlyRecord> series);
void save_series_csv(const std::filesystem::path& path, std::span<const HourlyRecord> series);

struct MonthChunk {
  YearMonth month;
  std::span<const HourlyRecord> records;
};

/// Consecutive calendar-month slices of `series` from `start` onward.
/// Throws DataError if two neighbouring records are not one hour apart.
std::vector<MonthChunk> monthly_stream(std::span<const HourlyRecord> series, YearMonth start);

struct TestSpan {
  YearMonth first;  // first test month; training ends the hour before it
  int months = 0;
};

/// Named presets: "27m" (Oct 2010 - Dec 2012) and "15m" (Oct 2011 - Dec 2012).
TestSpan test_span_preset(const std::string& name);

/// The last `months` months of a series.
TestSpan trailing_test_span(std::span<const HourlyRecord> series, int months);

struct ProtocolSplit {
  std::span<const HourlyRecord> train;
  std::span<const HourlyRecord> test;
};

/// Train: everything before span.first. Test: span.first through the end of
/// its last month. Throws ConfigError when the series does not cover both.
ProtocolSplit protocol_split(std::span<const HourlyRecord> series, const TestSpan& span);

struct Changepoint {
  int month = 0;  // zero-based month index the shift starts at
  double shift = 0.0;
};

struct DriftSpec {
  double base = 1000.0;
  double daily_amplitude = 200.0;
  double weekly_amplitude = 100.0;
  double trend_per_month = 0.0;
  std::vector<Changepoint> changepoints;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  YearMonth start{2009, 1};
};

void to_json(nlohmann::json& j, const DriftSpec& spec);
void from_json(const nlohmann::json& j, DriftSpec& spec);

/// load(h) = base + daily sin(2 pi hour/24) + weekly sin(2 pi weekhour/168)
///         + trend * month_index + active changepoint shifts + N(0, sigma^2)
/// where weekhour counts hours since Monday 00:00. Temperatures follow a
/// seasonal sinusoid with a per-station offset plus a share of the load noise.
Series synth_drift_demand(const DriftSpec& spec, int months);

}  // namespace driftsgd::data
