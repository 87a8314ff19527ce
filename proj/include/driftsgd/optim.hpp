#pragma once

// Update rules for online training: plain SGD, momentum SGD, static
// time-smoothed SGD (window of past losses re-evaluated at the current
// iterate), dynamic exponentially time-smoothed SGD (window of past gradients
// kept at their own iterates), and offline retraining from scratch.

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "driftsgd/losses.hpp"
#include "driftsgd/vec.hpp"

namespace driftsgd::optim {

enum class Method { sgd, momentum, sts, dts, offline };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Ring buffer of the last `capacity` gradients with weights alpha^i.
/// The normalizer W = sum_{i<capacity} alpha^i is fixed at construction and
/// does not depend on how many entries are present; absent slots count as 0.
class GradientHistory {
 public:
  struct Entry {
    long step = 0;
    Vector gradient;
  };

  GradientHistory(std::size_t capacity, double alpha);

  std::size_t capacity() const { return capacity_; }
  double alpha() const { return alpha_; }
  double normalizer() const { return normalizer_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Steps must strictly increase; the oldest entry is evicted when full.
  void push(long step, Vector gradient);

  /// (1/W) sum_i alpha^(t - step_i) g_i over stored entries, with t the newest
  /// step. Entries that fell out of the window carry no weight.
  Vector smoothed() const;

  /// Oldest first.
  std::vector<Entry> entries() const;

 private:
  std::size_t capacity_;
  double alpha_;
  double normalizer_;
  std::deque<Entry> entries_;
};

struct SgdPayload {};

struct MomentumPayload {
  Vector velocity;
};

/// Loss indices the next static smoothed step must re-evaluate.
struct StsPayload {
  std::size_t window = 1;
  std::deque<long> retained;
};

struct DtsPayload {
  GradientHistory history;
};

struct OfflinePayload {};

using Payload = std::variant<SgdPayload, MomentumPayload, StsPayload, DtsPayload, OfflinePayload>;

struct OptimizerState {
  Vector x;
  long step = 0;  // number of updates applied
  Payload payload;

  Method method() const;
};

OptimizerState make_sgd_state(Vector x0);
OptimizerState make_momentum_state(Vector x0);
OptimizerState make_sts_state(Vector x0, std::size_t window);
OptimizerState make_dts_state(Vector x0, std::size_t window, double alpha);

struct StepReport {
  long step = 0;
  std::size_t oracle_calls = 0;
  double step_norm = 0.0;
  std::chrono::duration<double> elapsed{};
};

/// x <- x - eta * grad. NumericError (state untouched) on non-finite input.
StepReport sgd_step(OptimizerState& state, std::span<const double> grad, double eta);

/// v <- decay * v + grad; x <- x - eta * v.
StepReport momentum_step(OptimizerState& state, std::span<const double> grad, double eta,
                         double decay);

/// Returns grad f_s(x) for a loss index s >= 1, or throws HistoryError.
using GradientProvider = std::function<Vector(long s, std::span<const double> x)>;

/// x <- x - (eta / w) sum_{i<w} grad f_{t-i}(x) at the current x, with t the
/// step's loss index (state.step + 1). Makes exactly min(t, w) provider calls.
StepReport sts_sgd_step(OptimizerState& state, const GradientProvider& gradient, double eta);

/// Uses the oracle's noisy gradients.
StepReport sts_sgd_step(OptimizerState& state, losses::LossOracle& oracle, double eta);

/// Records grad (evaluated by the caller at the current x) and moves
/// x <- x - (eta / W) sum_{i<w} alpha^i g_{t-i}. One oracle call per step.
StepReport dts_sgd_step(OptimizerState& state, std::span<const double> grad, double eta);

/// eta0 / sqrt(t), t >= 1.
double lr_schedule(double eta0, long t);

/// Plain SGD over samples 0..sample_count-1 for `epochs` passes starting at
/// `initial`, visiting samples in an order shuffled per epoch from `seed`.
/// `gradient(i, x)` returns the gradient of sample i at x.
Vector offline_retrain(std::size_t sample_count, const std::function<Vector(std::size_t, std::span<const double>)>& gradient,
                       Vector initial, int epochs, double eta, std::uint64_t seed);

/// Versioned text checkpoint of an optimizer state. Doubles are written in
/// shortest round-trip form so load(save(s)) reproduces s bit for bit.
void save_checkpoint(std::ostream& out, const OptimizerState& state);
OptimizerState load_checkpoint(std::istream& in);

}  // namespace driftsgd::optim
