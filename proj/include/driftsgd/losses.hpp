#pragma once

// Time-indexed loss families f_1..f_T with exact and stochastic gradients,
// plus the pinball (quantile) loss used by the forecasting models.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "driftsgd/vec.hpp"

namespace driftsgd::losses {

/// Regularity constants of a loss family: |f| <= bound, L-Lipschitz,
/// beta-smooth, gradient noise with E||noise||^2 <= noise_sigma^2.
/// Infinite entries mark constants that do not exist on the declared domain.
struct SmoothnessMeta {
  double bound = 0.0;
  double lipschitz = 0.0;
  double smoothness = 0.0;
  double noise_sigma = 0.0;

  /// True when every constant is finite, i.e. the family satisfies the
  /// boundedness/smoothness hypotheses the bound verifiers rely on.
  bool certified() const;
};

/// Deterministic part of a loss family, defined for 1 <= t <= horizon().
/// Implementations never see t <= 0; LossOracle applies the zero padding.
class LossFamily {
 public:
  virtual ~LossFamily() = default;

  virtual long horizon() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual double eval(long t, std::span<const double> x) const = 0;
  virtual Vector grad(long t, std::span<const double> x) const = 0;
  virtual SmoothnessMeta meta() const = 0;
};

/// A loss family plus a gradient-noise model. Copies share the (immutable)
/// family but own their random stream.
class LossOracle {
 public:
  explicit LossOracle(std::shared_ptr<const LossFamily> family);

  long horizon() const { return family_->horizon(); }
  std::size_t dimension() const { return family_->dimension(); }

  /// f_t(x); 0 for t <= 0. Throws HistoryError for t > horizon().
  double eval(long t, std::span<const double> x) const;
  /// Exact gradient; the zero vector for t <= 0.
  Vector grad(long t, std::span<const double> x) const;

  /// grad(t, x) plus isotropic Gaussian noise with total variance sigma^2,
  /// drawn from the oracle's own generator. Deterministic given the seed and
  /// the order of calls.
  Vector noisy_grad(long t, std::span<const double> x);
  Vector noisy_grad(long t, std::span<const double> x, std::mt19937_64& rng) const;

  SmoothnessMeta meta() const;
  double noise_sigma() const { return sigma_; }

  const LossFamily& family() const { return *family_; }

 private:
  friend LossOracle with_gaussian_noise(const LossOracle&, double, std::uint64_t);

  std::shared_ptr<const LossFamily> family_;
  double sigma_ = 0.0;
  std::mt19937_64 rng_;
};

/// Axis-aligned box [lower_i, upper_i] used to certify constants of families
/// that are unbounded on all of R^d.
struct Box {
  Vector lower;
  Vector upper;
};

/// f_t(x) = ||x - c_t||^2. Without a box the meta is {inf, inf, 2, 0}.
LossOracle quadratic_family(std::vector<Vector> centers, std::optional<Box> domain = std::nullopt);

/// f_t(x) = M * sum_j sin(x_j + phase_t), one phase per step.
/// meta = {M d, M sqrt(d), M, 0}.
LossOracle sinusoid_family(double amplitude, std::vector<double> phases, std::size_t dimension = 1);

/// Phases drawn i.i.d. uniform on [0, 2 pi) from the given seed.
std::vector<double> random_phases(long count, std::uint64_t seed);

/// Returns a copy of `oracle` whose noisy gradients carry N(0, sigma^2/d I) noise.
LossOracle with_gaussian_noise(const LossOracle& oracle, double sigma, std::uint64_t seed);

/// Pinball loss q max(y - yhat, 0) + (1 - q) max(yhat - y, 0), q in (0, 1).
double quantile_loss(double y, double yhat, double q);

/// d/dyhat of quantile_loss: -q below the target, 1 - q above, 0 at the kink.
double quantile_loss_subgradient(double y, double yhat, double q);

}  // namespace driftsgd::losses
