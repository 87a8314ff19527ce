#include "driftsgd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "driftsgd/errors.hpp"

namespace driftsgd::losses {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class QuadraticFamily final : public LossFamily {
 public:
  QuadraticFamily(std::vector<Vector> centers, std::optional<Box> domain)
      : centers_(std::move(centers)), domain_(std::move(domain)) {}

  long horizon() const override { return static_cast<long>(centers_.size()); }
  std::size_t dimension() const override { return centers_.front().size(); }

  double eval(long t, std::span<const double> x) const override {
    const Vector& c = centers_[static_cast<std::size_t>(t - 1)];
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += (x[j] - c[j]) * (x[j] - c[j]);
    return s;
  }

  Vector grad(long t, std::span<const double> x) const override {
    const Vector& c = centers_[static_cast<std::size_t>(t - 1)];
    Vector g(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) g[j] = 2.0 * (x[j] - c[j]);
    return g;
  }

  SmoothnessMeta meta() const override {
    if (!domain_) return {kInf, kInf, 2.0, 0.0};
    // The farthest point of a box from c is a corner, chosen per coordinate.
    double worst = 0.0;
    for (const Vector& c : centers_) {
      double s = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        const double a = domain_->lower[j] - c[j];
        const double b = domain_->upper[j] - c[j];
        s += std::max(a * a, b * b);
      }
      worst = std::max(worst, s);
    }
    return {worst, 2.0 * std::sqrt(worst), 2.0, 0.0};
  }

 private:
  std::vector<Vector> centers_;
  std::optional<Box> domain_;
};

class SinusoidFamily final : public LossFamily {
 public:
  SinusoidFamily(double amplitude, std::vector<double> phases, std::size_t dimension)
      : amplitude_(amplitude), phases_(std::move(phases)), dimension_(dimension) {}

  long horizon() const override { return static_cast<long>(phases_.size()); }
  std::size_t dimension() const override { return dimension_; }

  double eval(long t, std::span<const double> x) const override {
    const double phase = phases_[static_cast<std::size_t>(t - 1)];
    double s = 0.0;
    for (double xj : x) s += std::sin(xj + phase);
    return amplitude_ * s;
  }

  Vector grad(long t, std::span<const double> x) const override {
    const double phase = phases_[static_cast<std::size_t>(t - 1)];
    Vector g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = amplitude_ * std::cos(x[j] + phase);
    return g;
  }

  SmoothnessMeta meta() const override {
    const double d = static_cast<double>(dimension_);
    return {amplitude_ * d, amplitude_ * std::sqrt(d), amplitude_, 0.0};
  }

 private:
  double amplitude_;
  std::vector<double> phases_;
  std::size_t dimension_;
};

void check_quantile(double q) {
  if (!(q > 0.0 && q < 1.0))
    throw ConfigError("quantile must lie in (0, 1), got " + std::to_string(q));
}

}  // namespace

bool SmoothnessMeta::certified() const {
  return std::isfinite(bound) && std::isfinite(lipschitz) && std::isfinite(smoothness) &&
         std::isfinite(noise_sigma);
}

LossOracle::LossOracle(std::shared_ptr<const LossFamily> family) : family_(std::move(family)) {
  if (!family_) throw ConfigError("loss oracle needs a family");
}

double LossOracle::eval(long t, std::span<const double> x) const {
  if (t <= 0) return 0.0;
  if (t > horizon())
    throw HistoryError("loss index " + std::to_string(t) + " beyond horizon " +
                       std::to_string(horizon()));
  return family_->eval(t, x);
}

Vector LossOracle::grad(long t, std::span<const double> x) const {
  if (t <= 0) return Vector(dimension(), 0.0);
  if (t > horizon())
    throw HistoryError("loss index " + std::to_string(t) + " beyond horizon " +
                       std::to_string(horizon()));
  return family_->grad(t, x);
}

Vector LossOracle::noisy_grad(long t, std::span<const double> x) {
  return noisy_grad(t, x, rng_);
}

Vector LossOracle::noisy_grad(long t, std::span<const double> x, std::mt19937_64& rng) const {
  Vector g = grad(t, x);
  if (sigma_ > 0.0 && t >= 1) {  // padded losses stay exactly zero
    std::normal_distribution<double> noise(0.0, sigma_ / std::sqrt(static_cast<double>(g.size())));
    for (double& v : g) v += noise(rng);
  }
  return g;
}

SmoothnessMeta LossOracle::meta() const {
  SmoothnessMeta m = family_->meta();
  m.noise_sigma = sigma_;
  return m;
}

LossOracle quadratic_family(std::vector<Vector> centers, std::optional<Box> domain) {
  if (centers.empty()) throw ConfigError("quadratic family needs at least one center");
  const std::size_t d = centers.front().size();
  if (d == 0) throw ConfigError("quadratic family centers must be nonempty vectors");
  for (const Vector& c : centers)
    if (c.size() != d) throw ConfigError("quadratic family centers differ in dimension");
  if (domain) {
    if (domain->lower.size() != d || domain->upper.size() != d)
      throw ConfigError("domain box dimension does not match centers");
    for (std::size_t j = 0; j < d; ++j)
      if (!(domain->lower[j] <= domain->upper[j])) throw ConfigError("domain box is empty");
  }
  return LossOracle(std::make_shared<QuadraticFamily>(std::move(centers), std::move(domain)));
}

LossOracle sinusoid_family(double amplitude, std::vector<double> phases, std::size_t dimension) {
  if (!(amplitude > 0.0)) throw ConfigError("sinusoid amplitude must be positive");
  if (phases.empty()) throw ConfigError("sinusoid family needs at least one phase");
  if (dimension == 0) throw ConfigError("sinusoid dimension must be positive");
  return LossOracle(std::make_shared<SinusoidFamily>(amplitude, std::move(phases), dimension));
}

std::vector<double> random_phases(long count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0L)));
  for (double& p : out) p = phase(rng);
  return out;
}

LossOracle with_gaussian_noise(const LossOracle& oracle, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
  LossOracle out = oracle;
  out.sigma_ = sigma;
  out.rng_.seed(seed);
  return out;
}

double quantile_loss(double y, double yhat, double q) {
  check_quantile(q);
  return q * std::max(y - yhat, 0.0) + (1.0 - q) * std::max(yhat - y, 0.0);
}

double quantile_loss_subgradient(double y, double yhat, double q) {
  check_quantile(q);
  if (yhat < y) return -q;
  if (yhat > y) return 1.0 - q;
  return 0.0;
}

}  // namespace driftsgd::losses
