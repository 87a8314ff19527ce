#pragma once

// Closed forms of the smoothed-gradient variance bound, the two bounds on
// differences of the smoothed loss, and the dynamic local regret bound of
// DTS-SGD, each paired with an empirical verifier.

#include <cstdint>
#include <string>
#include <utility>

#include "driftsgd/losses.hpp"
#include "driftsgd/regret.hpp"

namespace driftsgd::bounds {

inline constexpr int kReportSchemaVersion = 1;

struct BoundConfig {
  long horizon = 0;
  std::size_t window = 0;
  double alpha = 0.0;
  double eta = 0.0;
  double smoothness = 0.0;
  double bound = 0.0;
  double sigma = 0.0;
};

/// Analytic bound vs. empirical value. violated == (margin < -tolerance).
struct BoundReport {
  std::string name;
  double analytic = 0.0;
  double empirical = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;
  bool violated = false;
  BoundConfig config;
};

BoundReport make_report(std::string name, double analytic, double empirical, double tolerance,
                        BoundConfig config);

/// sigma^2 (1 - alpha^{2w}) / (W^2 (1 - alpha^2)); sigma^2 / w at alpha = 1.
double variance_bound(double sigma, std::size_t w, double alpha);

/// Bound on S_{t+1}(x_{t+1}) - S_t(x_{t+1}); requires 0 < alpha < 1.
double lemma3_bound(double bound, std::size_t w, double alpha);

/// Bound on S_t(x_t) - S_{t+1}(x_{t+1}): 2M (1 - alpha^w) / (W (1 - alpha)),
/// continued by 2M at alpha = 1.
double lemma4_bound(double bound, std::size_t w, double alpha);

/// (T / W) (8 beta M + sigma^2). Warns on stderr when alpha < 0.9.
double theorem1_bound(long horizon, std::size_t w, double alpha, double smoothness, double bound,
                      double sigma);

/// Monte Carlo estimate of E||grad~S - grad S||^2 at loss index t (>= w, so
/// the window is full) and point x. Tolerance is 3 standard errors of the
/// mean. Refuses fewer than 10^4 samples.
BoundReport verify_variance_bound(losses::LossOracle& oracle, long t, std::span<const double> x,
                                  std::size_t w, double alpha, long samples);

/// Max over the run of S_{t+1}(x_{t+1}) - S_t(x_{t+1}) (first) and of
/// S_t(x_t) - S_{t+1}(x_{t+1}) (second), against the lemma bounds with
/// M = the oracle's certified bound. Refuses uncertified families.
std::pair<BoundReport, BoundReport> verify_smoothed_diffs(const losses::LossOracle& oracle,
                                                          const regret::RegretLedger& ledger,
                                                          std::size_t w, double alpha);

/// Runs DTS-SGD with eta = 1/beta for `horizon` steps from x = 0 and compares
/// DLR_w(T), computed from exact gradients at the iterates, with the bound.
/// The oracle's noise stream is reseeded with `seed`.
BoundReport verify_theorem1(const losses::LossOracle& oracle, long horizon, std::size_t w,
                            double alpha, std::uint64_t seed);

/// One JSON object per report, schema_version included.
std::string to_json(const BoundReport& report);

}  // namespace driftsgd::bounds
