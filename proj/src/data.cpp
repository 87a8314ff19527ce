#include "driftsgd/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "driftsgd/errors.hpp"

namespace driftsgd::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    cells.push_back(line.substr(begin, comma == std::string_view::npos ? line.npos : comma - begin));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool same_value(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

bool HourlyRecord::operator==(const HourlyRecord& other) const {
  if (timestamp != other.timestamp || load_missing != other.load_missing) return false;
  if (!load_missing && !same_value(load, other.load)) return false;
  for (std::size_t i = 0; i < kStations; ++i)
    if (!same_value(temps[i], other.temps[i])) return false;
  return true;
}

LoadResult read_gefcom_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(1, "missing header row");

  int ts_col = -1, load_col = -1;
  std::array<int, kStations> temp_cols;
  temp_cols.fill(-1);
  const auto header = split_commas(line);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = trim(header[c]);
    if (name == "TIMESTAMP" || name == "timestamp") ts_col = static_cast<int>(c);
    else if (name == "LOAD" || name == "load") load_col = static_cast<int>(c);
    else if (name.size() >= 2 && name[0] == 'w') {
      unsigned station = 0;
      auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), station);
      if (ec == std::errc() && p == name.data() + name.size() && station >= 1 && station <= kStations)
        temp_cols[station - 1] = static_cast<int>(c);
    }
  }
  if (ts_col < 0 || load_col < 0) throw FormatError(1, "header needs timestamp and load columns");

  LoadResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() <= static_cast<std::size_t>(std::max(ts_col, load_col)))
      throw FormatError(line_no, "row has too few columns");

    HourlyRecord rec;
    if (!parse_timestamp(trim(cells[static_cast<std::size_t>(ts_col)]), rec.timestamp))
      throw FormatError(line_no, "unparseable timestamp '" + std::string(cells[static_cast<std::size_t>(ts_col)]) + "'");
    if (auto load = parse_number(cells[static_cast<std::size_t>(load_col)])) {
      rec.load = *load;
    } else {
      rec.load = kNaN;
      rec.load_missing = true;
      ++result.missing_loads;
    }
    for (std::size_t s = 0; s < kStations; ++s) {
      const int c = temp_cols[s];
      rec.temps[s] = kNaN;
      if (c >= 0 && static_cast<std::size_t>(c) < cells.size())
        if (auto t = parse_number(cells[static_cast<std::size_t>(c)])) rec.temps[s] = *t;
    }
    if (!result.records.empty() && rec.timestamp <= result.records.back().timestamp)
      throw DataError("line " + std::to_string(line_no) + ": timestamp " + format_timestamp(rec.timestamp) +
                      " does not follow " + format_timestamp(result.records.back().timestamp));
    result.records.push_back(rec);
  }
  return result;
}

LoadResult load_gefcom_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_gefcom_csv(in);
}

void write_series_csv(std::ostream& out, std::span<const HourlyRecord> series) {
  out << "timestamp,load";
  for (std::size_t s = 1; s <= kStations; ++s) out << ",w" << s;
  out << '\n';
  for (const HourlyRecord& r : series) {
    out << format_timestamp(r.timestamp) << ',';
    if (!r.load_missing) out << format_number(r.load);
    for (double t : r.temps) {
      out << ',';
      if (!std::isnan(t)) out << format_number(t);
    }
    out << '\n';
  }
}

void save_series_csv(const std::filesystem::path& path, std::span<const HourlyRecord> series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_series_csv(out, series);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<MonthChunk> monthly_stream(std::span<const HourlyRecord> series, YearMonth start) {
  std::size_t i = 0;
  while (i < series.size() && year_month_of(series[i].timestamp) < start) ++i;

  std::vector<MonthChunk> chunks;
  while (i < series.size()) {
    const YearMonth month = year_month_of(series[i].timestamp);
    std::size_t j = i + 1;
    for (; j < series.size(); ++j) {
      if (series[j].timestamp - series[j - 1].timestamp != std::chrono::hours{1})
        throw DataError("gap in series after " + format_timestamp(series[j - 1].timestamp));
      if (year_month_of(series[j].timestamp) != month) break;
    }
    chunks.push_back({month, series.subspan(i, j - i)});
    i = j;
  }
  return chunks;
}

TestSpan test_span_preset(const std::string& name) {
  if (name == "27m") return {{2010, 10}, 27};
  if (name == "15m") return {{2011, 10}, 15};
  throw ConfigError("unknown test-span preset '" + name + "' (use 27m or 15m)");
}

TestSpan trailing_test_span(std::span<const HourlyRecord> series, int months) {
  if (series.empty()) throw ConfigError("empty series has no test span");
  if (months < 1) throw ConfigError("test span needs at least one month");
  const YearMonth last = year_month_of(series.back().timestamp);
  YearMonth first = last;
  for (int m = 1; m < months; ++m)
    first = first.month == 1 ? YearMonth{first.year - 1, 12} : YearMonth{first.year, first.month - 1};
  return {first, months};
}

ProtocolSplit protocol_split(std::span<const HourlyRecord> series, const TestSpan& span) {
  if (span.months < 1) throw ConfigError("test span needs at least one month");
  YearMonth end = span.first;
  for (int m = 0; m < span.months; ++m) end = end.next();
  const Timestamp test_begin = span.first.first_hour();
  const Timestamp test_end = end.first_hour();

  if (series.empty() || series.front().timestamp >= test_begin)
    throw ConfigError("series has no training data before " + span.first.to_string());
  if (series.back().timestamp < test_end - std::chrono::hours{1})
    throw ConfigError("series ends before the test span does");

  std::size_t a = 0;
  while (a < series.size() && series[a].timestamp < test_begin) ++a;
  std::size_t b = a;
  while (b < series.size() && series[b].timestamp < test_end) ++b;
  return {series.subspan(0, a), series.subspan(a, b - a)};
}

void to_json(nlohmann::json& j, const DriftSpec& s) {
  nlohmann::json cps = nlohmann::json::array();
  for (const Changepoint& c : s.changepoints) cps.push_back({{"month", c.month}, {"shift", c.shift}});
  j = {{"base", s.base},
       {"daily_amplitude", s.daily_amplitude},
       {"weekly_amplitude", s.weekly_amplitude},
       {"trend_per_month", s.trend_per_month},
       {"changepoints", cps},
       {"noise_sigma", s.noise_sigma},
       {"seed", s.seed},
       {"start", s.start.to_string()}};
}

void from_json(const nlohmann::json& j, DriftSpec& s) {
  s = DriftSpec{};
  s.base = j.value("base", s.base);
  s.daily_amplitude = j.value("daily_amplitude", s.daily_amplitude);
  s.weekly_amplitude = j.value("weekly_amplitude", s.weekly_amplitude);
  s.trend_per_month = j.value("trend_per_month", s.trend_per_month);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.seed = j.value("seed", s.seed);
  if (j.contains("start")) s.start = YearMonth::parse(j.at("start").get<std::string>());
  if (j.contains("changepoints"))
    for (const auto& c : j.at("changepoints"))
      s.changepoints.push_back({c.at("month").get<int>(), c.at("shift").get<double>()});
}

Series synth_drift_demand(const DriftSpec& spec, int months) {
  if (months < 2) throw ConfigError("synthetic series needs at least two months");
  if (spec.daily_amplitude < 0.0 || spec.weekly_amplitude < 0.0)
    throw ConfigError("amplitudes must be nonnegative");
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");

  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  Series series;
  YearMonth month = spec.start;
  for (int m = 0; m < months; ++m, month = month.next()) {
    double level = spec.base + spec.trend_per_month * m;
    for (const Changepoint& c : spec.changepoints)
      if (m >= c.month) level += c.shift;
    const Timestamp first = month.first_hour();
    const int hours = static_cast<int>(month.days()) * 24;
    for (int h = 0; h < hours; ++h) {
      HourlyRecord r;
      r.timestamp = first + std::chrono::hours{h};
      const int hour = hour_of_day(r.timestamp);
      const int week_hour = weekday_index(r.timestamp) * 24 + hour;
      const double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * unit(rng) : 0.0;
      r.load = level + spec.daily_amplitude * std::sin(two_pi * hour / 24.0) +
               spec.weekly_amplitude * std::sin(two_pi * week_hour / 168.0) + noise;
      const double season = std::sin(two_pi * (month_index(r.timestamp) + hour / 24.0) / 12.0);
      for (std::size_t s = 0; s < kStations; ++s)
        r.temps[s] = 55.0 + 25.0 * season + 0.2 * static_cast<double>(s) +
                     5.0 * std::sin(two_pi * hour / 24.0) + 0.01 * noise;
      series.push_back(r);
    }
  }
  return series;
}

}  // namespace driftsgd::data
