#include "driftsgd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "driftsgd/errors.hpp"
#include "driftsgd/online_run.hpp"

namespace driftsgd::bounds {

namespace {

void check_window_alpha(std::size_t w, double alpha) {
  if (w < 1) throw ConfigError("window must be at least 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
}

void check_bound(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("loss bound M must be positive and finite");
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

BoundReport make_report(std::string name, double analytic, double empirical, double tolerance,
                        BoundConfig config) {
  BoundReport r;
  r.name = std::move(name);
  r.analytic = analytic;
  r.empirical = empirical;
  r.margin = analytic - empirical;
  r.tolerance = tolerance;
  r.violated = !(r.margin >= -tolerance);  // NaN counts as a violation
  r.config = config;
  return r;
}

double variance_bound(double sigma, std::size_t w, double alpha) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  check_window_alpha(w, alpha);
  if (alpha == 1.0) return sigma * sigma / static_cast<double>(w);
  const double normalizer = regret::exp_normalizer(w, alpha);
  return sigma * sigma * (1.0 - std::pow(alpha, 2.0 * static_cast<double>(w))) /
         (normalizer * normalizer * (1.0 - alpha * alpha));
}

double lemma3_bound(double bound, std::size_t w, double alpha) {
  check_bound(bound);
  check_window_alpha(w, alpha);
  if (alpha >= 1.0) throw ConfigError("smoothed-loss shift bound is singular at alpha = 1");
  const double normalizer = regret::exp_normalizer(w, alpha);
  const double tail = std::pow(alpha, static_cast<double>(w) - 1.0);
  return bound * (1.0 + tail) / normalizer +
         bound * (1.0 - tail) * (1.0 + alpha) / (normalizer * (1.0 - alpha));
}

double lemma4_bound(double bound, std::size_t w, double alpha) {
  check_bound(bound);
  check_window_alpha(w, alpha);
  if (alpha == 1.0) return 2.0 * bound;
  const double normalizer = regret::exp_normalizer(w, alpha);
  return 2.0 * bound * (1.0 - std::pow(alpha, static_cast<double>(w))) / (normalizer * (1.0 - alpha));
}

double theorem1_bound(long horizon, std::size_t w, double alpha, double smoothness, double bound,
                      double sigma) {
  if (horizon < 1) throw ConfigError("horizon must be positive");
  check_window_alpha(w, alpha);
  if (!(smoothness > 0.0) || !(bound > 0.0) || !(sigma >= 0.0))
    throw ConfigError("smoothness and bound must be positive, sigma nonnegative");
  if (alpha < 0.9)
    std::cerr << "warning: regret bound assumes alpha close to 1, got " << alpha << '\n';
  const double normalizer = regret::exp_normalizer(w, alpha);
  return static_cast<double>(horizon) / normalizer * (8.0 * smoothness * bound + sigma * sigma);
}

BoundReport verify_variance_bound(losses::LossOracle& oracle, long t, std::span<const double> x,
                                  std::size_t w, double alpha, long samples) {
  check_window_alpha(w, alpha);
  if (samples < 10000) throw ConfigError("variance check needs at least 10^4 Monte Carlo samples");
  if (t < static_cast<long>(w)) throw ConfigError("variance check needs a full window (t >= w)");
  if (x.size() != oracle.dimension()) throw ConfigError("point dimension mismatch");

  const double normalizer = regret::exp_normalizer(w, alpha);
  std::vector<Vector> exact(w);
  std::vector<double> weight(w);
  for (std::size_t i = 0; i < w; ++i) {
    exact[i] = oracle.grad(t - static_cast<long>(i), x);
    weight[i] = std::pow(alpha, static_cast<double>(i)) / normalizer;
  }

  // Welford accumulation of ||sum_i weight_i (noisy_i - exact_i)||^2.
  double mean = 0.0, m2 = 0.0;
  Vector deviation(x.size());
  for (long n = 1; n <= samples; ++n) {
    std::fill(deviation.begin(), deviation.end(), 0.0);
    for (std::size_t i = 0; i < w; ++i) {
      const Vector g = oracle.noisy_grad(t - static_cast<long>(i), x);
      for (std::size_t j = 0; j < g.size(); ++j) deviation[j] += weight[i] * (g[j] - exact[i][j]);
    }
    const double value = squared_norm(deviation);
    const double delta = value - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (value - mean);
  }
  const double variance = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
  const double standard_error = std::sqrt(variance / static_cast<double>(samples));

  BoundConfig cfg;
  cfg.horizon = t;
  cfg.window = w;
  cfg.alpha = alpha;
  cfg.sigma = oracle.noise_sigma();
  return make_report("variance_bound", variance_bound(oracle.noise_sigma(), w, alpha), mean,
                     3.0 * standard_error, cfg);
}

std::pair<BoundReport, BoundReport> verify_smoothed_diffs(const losses::LossOracle& oracle,
                                                          const regret::RegretLedger& ledger,
                                                          std::size_t w, double alpha) {
  const losses::SmoothnessMeta meta = oracle.meta();
  if (!std::isfinite(meta.bound)) throw ConfigError("smoothed-loss bounds need a bounded loss family");
  check_window_alpha(w, alpha);
  const double normalizer = regret::exp_normalizer(w, alpha);

  double worst_shift = -std::numeric_limits<double>::infinity();
  double worst_descent = -std::numeric_limits<double>::infinity();
  const std::size_t steps = ledger.steps();
  for (std::size_t t = 1; t < steps; ++t) {
    // S_t evaluated at the iterates one step later: (1/W) sum alpha^i f_{t-i}(x_{t+1-i}).
    double shifted = 0.0;
    for (std::size_t i = 0; i < w && i < t; ++i)
      shifted += std::pow(alpha, static_cast<double>(i)) *
                 oracle.eval(static_cast<long>(t - i), ledger.iterates[t - i]);
    shifted /= normalizer;
    const double next = regret::smoothed_loss(ledger, t + 1, w, alpha);
    const double current = regret::smoothed_loss(ledger, t, w, alpha);
    worst_shift = std::max(worst_shift, next - shifted);
    worst_descent = std::max(worst_descent, current - next);
  }

  BoundConfig cfg;
  cfg.horizon = static_cast<long>(steps);
  cfg.window = w;
  cfg.alpha = alpha;
  cfg.bound = meta.bound;
  cfg.sigma = meta.noise_sigma;
  const double tol = 1e-9 * meta.bound;
  return {make_report("smoothed_loss_shift", lemma3_bound(meta.bound, w, alpha), worst_shift, tol, cfg),
          make_report("smoothed_loss_descent", lemma4_bound(meta.bound, w, alpha), worst_descent, tol, cfg)};
}

BoundReport verify_theorem1(const losses::LossOracle& oracle, long horizon, std::size_t w,
                            double alpha, std::uint64_t seed) {
  const losses::SmoothnessMeta meta = oracle.meta();
  if (!meta.certified() || !(meta.smoothness > 0.0) || !(meta.bound > 0.0))
    throw ConfigError("regret bound check needs certified, positive smoothness constants");
  losses::LossOracle run_oracle = losses::with_gaussian_noise(oracle, oracle.noise_sigma(), seed);

  optim::OracleRunConfig cfg;
  cfg.method = optim::Method::dts;
  cfg.window = w;
  cfg.alpha = alpha;
  cfg.eta = 1.0 / meta.smoothness;
  cfg.steps = horizon;
  const optim::OracleRun run = optim::run_on_oracle(run_oracle, cfg, Vector(oracle.dimension(), 0.0));

  const double empirical = run.first_nan_step ? std::numeric_limits<double>::quiet_NaN()
                                              : regret::dynamic_local_regret(run.ledger, w, alpha);
  const double analytic =
      theorem1_bound(horizon, w, alpha, meta.smoothness, meta.bound, meta.noise_sigma);

  BoundConfig echo{horizon, w, alpha, cfg.eta, meta.smoothness, meta.bound, meta.noise_sigma};
  return make_report("dynamic_local_regret", analytic, empirical, 1e-9 * analytic, echo);
}

std::string to_json(const BoundReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["name"] = r.name;
  j["analytic"] = number(r.analytic);
  j["empirical"] = number(r.empirical);
  j["margin"] = number(r.margin);
  j["tolerance"] = number(r.tolerance);
  j["violated"] = r.violated;
  j["config"] = {{"T", r.config.horizon}, {"w", r.config.window},     {"alpha", number(r.config.alpha)},
                 {"eta", number(r.config.eta)}, {"beta", number(r.config.smoothness)},
                 {"M", number(r.config.bound)}, {"sigma", number(r.config.sigma)}};
  return j.dump();
}

}  // namespace driftsgd::bounds
