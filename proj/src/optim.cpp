#include "driftsgd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "driftsgd/errors.hpp"
#include "driftsgd/regret.hpp"

namespace driftsgd::optim {

namespace {

using Clock = std::chrono::steady_clock;

template <class P>
P& payload_as(OptimizerState& state, const char* what) {
  if (auto* p = std::get_if<P>(&state.payload)) return *p;
  throw ConfigError(std::string(what) + " called on a " + to_string(state.method()) + " state");
}

void check_gradient(const OptimizerState& state, std::span<const double> grad) {
  if (grad.size() != state.x.size()) throw ConfigError("gradient dimension does not match parameters");
  if (!all_finite(grad)) throw NumericError("non-finite gradient");
}

void check_eta(double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("learning rate must be finite and nonnegative");
}

// x <- x - scale * direction, returning ||scale * direction||.
double apply(Vector& x, std::span<const double> direction, double scale) {
  axpy(-scale, direction, x);
  return std::abs(scale) * norm(direction);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::sgd: return "sgd_online";
    case Method::momentum: return "momentum";
    case Method::sts: return "sts_sgd";
    case Method::dts: return "dts_sgd";
    case Method::offline: return "sgd_offline";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "sgd_online" || name == "sgd") return Method::sgd;
  if (name == "momentum") return Method::momentum;
  if (name == "sts_sgd" || name == "sts") return Method::sts;
  if (name == "dts_sgd" || name == "dts") return Method::dts;
  if (name == "sgd_offline" || name == "offline") return Method::offline;
  throw ConfigError("unknown optimizer method '" + name + "'");
}

GradientHistory::GradientHistory(std::size_t capacity, double alpha)
    : capacity_(capacity), alpha_(alpha) {
  if (capacity < 1) throw ConfigError("history window must be at least 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  normalizer_ = regret::exp_normalizer(capacity, alpha);
}

void GradientHistory::push(long step, Vector gradient) {
  if (!entries_.empty()) {
    if (step <= entries_.back().step) throw HistoryError("history steps must strictly increase");
    if (gradient.size() != entries_.back().gradient.size())
      throw ConfigError("gradient dimension changed within the history");
  }
  entries_.push_back({step, std::move(gradient)});
  while (!entries_.empty() && entries_.back().step - entries_.front().step >= static_cast<long>(capacity_))
    entries_.pop_front();
  if (entries_.size() > capacity_) entries_.pop_front();
}

Vector GradientHistory::smoothed() const {
  if (entries_.empty()) return {};
  const long newest = entries_.back().step;
  Vector sum(entries_.back().gradient.size(), 0.0);
  for (const Entry& e : entries_) {
    const double weight = std::pow(alpha_, static_cast<double>(newest - e.step));
    axpy(weight, e.gradient, sum);
  }
  for (double& v : sum) v /= normalizer_;
  return sum;
}

std::vector<GradientHistory::Entry> GradientHistory::entries() const {
  return {entries_.begin(), entries_.end()};
}

Method OptimizerState::method() const {
  return static_cast<Method>(payload.index());
}

OptimizerState make_sgd_state(Vector x0) { return {std::move(x0), 0, SgdPayload{}}; }

OptimizerState make_momentum_state(Vector x0) {
  Vector v(x0.size(), 0.0);
  return {std::move(x0), 0, MomentumPayload{std::move(v)}};
}

OptimizerState make_sts_state(Vector x0, std::size_t window) {
  if (window < 1) throw ConfigError("window must be at least 1");
  return {std::move(x0), 0, StsPayload{window, {}}};
}

OptimizerState make_dts_state(Vector x0, std::size_t window, double alpha) {
  return {std::move(x0), 0, DtsPayload{GradientHistory(window, alpha)}};
}

StepReport sgd_step(OptimizerState& state, std::span<const double> grad, double eta) {
  const auto start = Clock::now();
  payload_as<SgdPayload>(state, "sgd_step");
  check_gradient(state, grad);
  check_eta(eta);
  StepReport r;
  r.step_norm = apply(state.x, grad, eta);
  r.step = ++state.step;
  r.oracle_calls = 1;
  r.elapsed = Clock::now() - start;
  return r;
}

StepReport momentum_step(OptimizerState& state, std::span<const double> grad, double eta,
                         double decay) {
  const auto start = Clock::now();
  auto& m = payload_as<MomentumPayload>(state, "momentum_step");
  check_gradient(state, grad);
  check_eta(eta);
  if (!(decay >= 0.0 && decay <= 1.0)) throw ConfigError("momentum decay must lie in [0, 1]");
  for (std::size_t j = 0; j < grad.size(); ++j) m.velocity[j] = decay * m.velocity[j] + grad[j];
  StepReport r;
  r.step_norm = apply(state.x, m.velocity, eta);
  r.step = ++state.step;
  r.oracle_calls = 1;
  r.elapsed = Clock::now() - start;
  return r;
}

StepReport sts_sgd_step(OptimizerState& state, const GradientProvider& gradient, double eta) {
  const auto start = Clock::now();
  auto& sts = payload_as<StsPayload>(state, "sts_sgd_step");
  check_eta(eta);
  const long t = state.step + 1;

  std::deque<long> retained = sts.retained;
  retained.push_back(t);
  while (retained.size() > sts.window) retained.pop_front();

  // All gradients at the current x; the state only changes once every call succeeded.
  Vector sum(state.x.size(), 0.0);
  for (long s : retained) {
    const Vector g = gradient(s, state.x);
    check_gradient(state, g);
    axpy(1.0, g, sum);
  }

  StepReport r;
  r.oracle_calls = retained.size();
  r.step_norm = apply(state.x, sum, eta / static_cast<double>(sts.window));
  sts.retained = std::move(retained);
  r.step = state.step = t;
  r.elapsed = Clock::now() - start;
  return r;
}

StepReport sts_sgd_step(OptimizerState& state, losses::LossOracle& oracle, double eta) {
  return sts_sgd_step(
      state, [&oracle](long s, std::span<const double> x) { return oracle.noisy_grad(s, x); }, eta);
}

StepReport dts_sgd_step(OptimizerState& state, std::span<const double> grad, double eta) {
  const auto start = Clock::now();
  auto& dts = payload_as<DtsPayload>(state, "dts_sgd_step");
  check_gradient(state, grad);
  check_eta(eta);
  const long t = state.step + 1;
  dts.history.push(t, Vector(grad.begin(), grad.end()));
  const Vector direction = dts.history.smoothed();
  StepReport r;
  r.step_norm = apply(state.x, direction, eta);
  r.step = state.step = t;
  r.oracle_calls = 1;
  r.elapsed = Clock::now() - start;
  return r;
}

double lr_schedule(double eta0, long t) {
  if (t < 1) throw ConfigError("schedule step must be at least 1");
  if (!(eta0 > 0.0)) throw ConfigError("initial learning rate must be positive");
  return eta0 / std::sqrt(static_cast<double>(t));
}

Vector offline_retrain(std::size_t sample_count,
                       const std::function<Vector(std::size_t, std::span<const double>)>& gradient,
                       Vector initial, int epochs, double eta, std::uint64_t seed) {
  if (sample_count == 0) throw ConfigError("offline retraining needs at least one sample");
  if (epochs < 1) throw ConfigError("offline retraining needs at least one epoch");
  OptimizerState state = make_sgd_state(std::move(initial));
  std::vector<std::size_t> order(sample_count);
  std::mt19937_64 rng(seed);
  for (int e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) sgd_step(state, gradient(i, state.x), eta);
  }
  return std::move(state.x);
}

}  // namespace driftsgd::optim
