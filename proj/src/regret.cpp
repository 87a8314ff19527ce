#include "driftsgd/regret.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "driftsgd/vec.hpp"

namespace driftsgd::regret {

namespace {

std::vector<double> axis_points(double lo, double hi, double resolution) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
    throw ConfigError("grid box must be finite and nonempty");
  const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / resolution - 1e-9));
  std::vector<double> pts(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    pts[k] = steps == 0 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
  return pts;
}

}  // namespace

Comparator<double> grid_minimizer(const std::function<double(std::span<const double>)>& objective,
                                  const GridBox& box, double resolution) {
  const std::size_t d = box.lower.size();
  if (d != box.upper.size() || d == 0) throw ConfigError("grid box bounds differ in dimension");
  if (d > 2) throw UnsupportedError("grid minimizer supports at most two dimensions");
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");

  const std::vector<double> xs = axis_points(box.lower[0], box.upper[0], resolution);
  const std::vector<double> ys =
      d == 2 ? axis_points(box.lower[1], box.upper[1], resolution) : std::vector<double>{0.0};

  Comparator<double> best{{}, std::numeric_limits<double>::infinity()};
  std::vector<double> point(d);
  // x outermost, strict improvement only: the first minimum seen is the
  // lexicographically lowest one.
  for (double x : xs) {
    for (double y : ys) {
      point[0] = x;
      if (d == 2) point[1] = y;
      const double v = objective(point);
      if (v < best.min_value) {
        best.min_value = v;
        best.argmin = point;
      }
    }
  }
  if (best.argmin.empty()) throw NumericError("objective is not finite anywhere on the grid");
  return best;
}

CalibrationGap calibration_gap(std::span<const std::vector<double>> gradients,
                               std::span<const std::vector<double>> directions) {
  if (directions.empty()) throw ConfigError("calibration gap needs at least one direction");
  const std::size_t d = directions.front().size();
  std::vector<double> sum(d, 0.0);
  for (const auto& g : gradients) {
    if (g.size() != d) throw ConfigError("gradient dimension does not match directions");
    axpy(1.0, g, sum);
  }
  CalibrationGap gap;
  gap.norm_value = norm(sum);
  gap.sampled_max = -std::numeric_limits<double>::infinity();
  for (const auto& u : directions) {
    if (u.size() != d) throw ConfigError("direction dimension mismatch");
    if (std::abs(norm(u) - 1.0) > 1e-9) throw ConfigError("calibration directions must be unit vectors");
    gap.sampled_max = std::max(gap.sampled_max, dot(u, sum));
  }
  return gap;
}

CalibrationGap calibration_gap(const RegretLedger& ledger, std::size_t t, std::size_t w,
                               std::span<const std::vector<double>> directions) {
  detail::check_window(w);
  if (t < 1 || t > ledger.steps()) throw ConfigError("step index outside the ledger");
  const std::size_t first = t >= w ? t - w : 0;  // zero-based start of s = t-w+1
  return calibration_gap(
      std::span<const std::vector<double>>(ledger.gradients).subspan(first, t - first), directions);
}

namespace {

std::string real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

void write_ledger_csv(std::ostream& out, const RegretLedger& ledger) {
  const std::size_t d = ledger.steps() ? ledger.iterates.front().size() : 0;
  out << 't';
  for (std::size_t j = 0; j < d; ++j) out << ",x" << j;
  out << ",f";
  for (std::size_t j = 0; j < d; ++j) out << ",g" << j;
  out << '\n';
  for (std::size_t t = 0; t < ledger.steps(); ++t) {
    out << t + 1;
    for (double v : ledger.iterates[t]) out << ',' << real(v);
    out << ',' << real(ledger.losses[t]);
    for (double v : ledger.gradients[t]) out << ',' << real(v);
    out << '\n';
  }
}

RegretLedger read_ledger_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(1, "missing ledger header");
  const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 4 || (columns - 2) % 2 != 0 || line.rfind("t,", 0) != 0)
    throw FormatError(1, "ledger header must read t,x...,f,g...");
  const std::size_t d = (columns - 2) / 2;

  RegretLedger ledger;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size()) throw FormatError(line_no, "bad number '" + cell + "'");
      cells.push_back(v);
    }
    if (cells.size() != columns) throw FormatError(line_no, "wrong number of columns");
    if (cells[0] != static_cast<double>(ledger.steps() + 1)) throw DataError("ledger steps must be contiguous from 1");
    ledger.append(std::vector<double>(cells.begin() + 1, cells.begin() + 1 + static_cast<long>(d)), cells[1 + d],
                  std::vector<double>(cells.begin() + 2 + static_cast<long>(d), cells.end()));
  }
  return ledger;
}

}  // namespace driftsgd::regret
