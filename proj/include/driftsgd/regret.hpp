#pragma once

// Regret functionals over a recorded online run: standard regret, the static
// local regret (past losses re-evaluated at the current iterate), the dynamic
// local regret (past gradients kept at their own iterates, exponentially
// weighted), the smoothed loss S_{t,w,alpha}, and the calibration gap.
//
// Everything here is templated on the scalar so the toy example can run in
// exact rational arithmetic; RegretLedger is the double instantiation.

#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftsgd/errors.hpp"

namespace driftsgd::regret {

/// W = sum_{i<w} alpha^i.
template <class S>
S exp_normalizer(std::size_t window, const S& alpha) {
  S total(0), weight(1);
  for (std::size_t i = 0; i < window; ++i) {
    total += weight;
    weight *= alpha;
  }
  return total;
}

/// Per-step record of an online run, steps contiguous from t = 1.
/// `reevaluated[t-1][i]` holds grad f_{t-i}(x_t) for i < min(t, window);
/// it is only filled when the static local regret is requested.
template <class S>
struct BasicRegretLedger {
  using Vec = std::vector<S>;

  std::vector<Vec> iterates;   // x_t
  std::vector<S> losses;       // f_t(x_t)
  std::vector<Vec> gradients;  // grad f_t(x_t)
  std::optional<std::vector<std::vector<Vec>>> reevaluated;
  std::size_t reevaluation_window = 0;

  std::size_t steps() const { return iterates.size(); }

  void append(Vec x, S loss, Vec grad) {
    iterates.push_back(std::move(x));
    losses.push_back(std::move(loss));
    gradients.push_back(std::move(grad));
  }
};

using RegretLedger = BasicRegretLedger<double>;

namespace detail {

template <class S>
void check_alpha(const S& alpha) {
  if (!(alpha > S(0)) || alpha > S(1)) throw ConfigError("alpha must lie in (0, 1]");
}

inline void check_window(std::size_t w) {
  if (w < 1) throw ConfigError("window must be at least 1");
}

template <class S>
S squared_norm(const std::vector<S>& v) {
  S s(0);
  for (const S& x : v) s += x * x;
  return s;
}

}  // namespace detail

/// (1/W) sum_{i<w} alpha^i grad f_{t-i}(x_{t-i}), zero-padded for t - i <= 0.
template <class S>
std::vector<S> smoothed_gradient(const BasicRegretLedger<S>& ledger, std::size_t t, std::size_t w,
                                 const S& alpha) {
  detail::check_window(w);
  detail::check_alpha(alpha);
  if (t < 1 || t > ledger.steps()) throw ConfigError("step index outside the ledger");
  const S normalizer = exp_normalizer(w, alpha);
  std::vector<S> sum(ledger.gradients[t - 1].size(), S(0));
  S weight(1);
  for (std::size_t i = 0; i < w && i < t; ++i) {
    const auto& g = ledger.gradients[t - 1 - i];
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += weight * g[j];
    weight *= alpha;
  }
  for (S& v : sum) v /= normalizer;
  return sum;
}

/// S_{t,w,alpha}(x_t) = (1/W) sum_{i<w} alpha^i f_{t-i}(x_{t-i}).
template <class S>
S smoothed_loss(const BasicRegretLedger<S>& ledger, std::size_t t, std::size_t w, const S& alpha) {
  detail::check_window(w);
  detail::check_alpha(alpha);
  if (t < 1 || t > ledger.steps()) throw ConfigError("step index outside the ledger");
  S sum(0), weight(1);
  for (std::size_t i = 0; i < w && i < t; ++i) {
    sum += weight * ledger.losses[t - 1 - i];
    weight *= alpha;
  }
  return sum / exp_normalizer(w, alpha);
}

/// DLR_w(T) = sum_t ||smoothed_gradient(t)||^2.
template <class S>
S dynamic_local_regret(const BasicRegretLedger<S>& ledger, std::size_t w, const S& alpha) {
  detail::check_window(w);
  detail::check_alpha(alpha);
  S total(0);
  for (std::size_t t = 1; t <= ledger.steps(); ++t)
    total += detail::squared_norm(smoothed_gradient(ledger, t, w, alpha));
  return total;
}

/// Fills ledger.reevaluated with grad f_{t-i}(x_t) for every step and i < w.
/// `grad_at(s, x)` returns grad f_s(x) for s >= 1.
template <class S, class GradFn>
void attach_reevaluations(BasicRegretLedger<S>& ledger, std::size_t w, GradFn&& grad_at) {
  detail::check_window(w);
  std::vector<std::vector<std::vector<S>>> table(ledger.steps());
  for (std::size_t t = 1; t <= ledger.steps(); ++t)
    for (std::size_t i = 0; i < w && i < t; ++i)
      table[t - 1].push_back(grad_at(static_cast<long>(t - i), ledger.iterates[t - 1]));
  ledger.reevaluated = std::move(table);
  ledger.reevaluation_window = w;
}

/// SLR_w(T) = sum_t ||(1/w) sum_{i<w} grad f_{t-i}(x_t)||^2. Needs the
/// re-evaluation table for a window of at least w; throws DataError otherwise.
template <class S>
S static_local_regret(const BasicRegretLedger<S>& ledger, std::size_t w) {
  detail::check_window(w);
  if (!ledger.reevaluated || ledger.reevaluation_window < w)
    throw DataError("static local regret needs re-evaluated gradients for window " +
                    std::to_string(w));
  S total(0);
  for (std::size_t t = 1; t <= ledger.steps(); ++t) {
    const auto& row = (*ledger.reevaluated)[t - 1];
    std::vector<S> sum(ledger.iterates[t - 1].size(), S(0));
    for (std::size_t i = 0; i < w && i < t; ++i)
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += row[i][j];
    for (S& v : sum) v /= S(static_cast<long>(w));
    total += detail::squared_norm(sum);
  }
  return total;
}

/// Lazily computes the re-evaluations it needs.
template <class S, class GradFn>
S static_local_regret(BasicRegretLedger<S>& ledger, std::size_t w, GradFn&& grad_at) {
  if (!ledger.reevaluated || ledger.reevaluation_window < w)
    attach_reevaluations(ledger, w, std::forward<GradFn>(grad_at));
  return static_local_regret(std::as_const(ledger), w);
}

/// Fixed comparator point and the cumulative loss it attains.
template <class S>
struct Comparator {
  std::vector<S> argmin;
  S min_value;
};

/// sum_t f_t(x_t) - min_x sum_t f_t(x).
template <class S>
S standard_regret(const BasicRegretLedger<S>& ledger, const Comparator<S>& comparator) {
  if (ledger.steps() > 0 && comparator.argmin.size() != ledger.iterates.front().size())
    throw ConfigError("comparator dimension does not match the ledger");
  S total(0);
  for (const S& f : ledger.losses) total += f;
  return total - comparator.min_value;
}

struct GridBox {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Exhaustive grid search in one or two dimensions. Grid points are
/// lower + k * step with the step at most `resolution` and both ends included.
/// Ties resolve to the lexicographically lowest point.
Comparator<double> grid_minimizer(const std::function<double(std::span<const double>)>& objective,
                                  const GridBox& box, double resolution);

struct CalibrationGap {
  double sampled_max = 0.0;
  double norm_value = 0.0;
};

/// max_u <u, sum_s g_s> over the supplied unit directions, and ||sum_s g_s||.
/// Directions must have unit norm (within 1e-9).
CalibrationGap calibration_gap(std::span<const std::vector<double>> gradients,
                               std::span<const std::vector<double>> directions);

/// Same, for the window s = t-w+1..t of a ledger's recorded gradients.
CalibrationGap calibration_gap(const RegretLedger& ledger, std::size_t t, std::size_t w,
                               std::span<const std::vector<double>> directions);

/// Ledger CSV: header "t,x0..x{d-1},f,g0..g{d-1}", one row per step, reals
/// in shortest round-trip form. The re-evaluation table is not serialized.
void write_ledger_csv(std::ostream& out, const RegretLedger& ledger);
RegretLedger read_ledger_csv(std::istream& in);

}  // namespace driftsgd::regret
