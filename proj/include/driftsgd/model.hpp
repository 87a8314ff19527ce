#pragma once

// Desk-scale quantile forecasting models: a linear map and a one-hidden-layer
// tanh network from a 48 x 44 feature window to 3 x 24 quantile forecasts,
// with hand-written gradients.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftsgd/calendar.hpp"
#include "driftsgd/vec.hpp"

namespace driftsgd::model {

inline constexpr std::size_t kHistoryHours = 48;
inline constexpr std::size_t kHorizon = 24;
inline constexpr std::size_t kFeatureCount = 44;
inline constexpr std::size_t kInputSize = kHistoryHours * kFeatureCount;

// Column layout of one feature row.
inline constexpr std::size_t kLoadColumn = 0;
inline constexpr std::size_t kHourOffset = 1;      // 24 columns, hour 0..23
inline constexpr std::size_t kWeekdayOffset = 25;  // 7 columns, Monday = 0
inline constexpr std::size_t kMonthOffset = 32;    // 12 columns, January = 0

inline const std::vector<double> kDefaultQuantiles{0.1, 0.5, 0.9};

/// z-score parameters for the load column, frozen from an initial window.
struct Standardization {
  double mean = 0.0;
  double scale = 1.0;

  double apply(double load) const { return (load - mean) / scale; }
  double invert(double z) const { return z * scale + mean; }
};

/// Row-major 48 x 44 feature window.
struct FeatureMatrix {
  std::vector<double> values = std::vector<double>(kInputSize, 0.0);

  double at(std::size_t row, std::size_t col) const { return values[row * kFeatureCount + col]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * kFeatureCount, kFeatureCount);
  }
};

/// Encodes 48 consecutive hourly loads and their timestamps. Throws DataError
/// if the timestamps are not consecutive hours or the counts differ from 48.
FeatureMatrix encode_features(std::span<const double> loads, std::span<const Timestamp> stamps,
                              const Standardization& standardization);

/// Row-major (quantile x horizon) forecast.
struct QuantileForecast {
  std::size_t quantiles = 0;
  std::vector<double> values;

  double at(std::size_t q, std::size_t k) const { return values[q * kHorizon + k]; }
};

enum class Architecture { linear, mlp };

struct ModelSpec {
  Architecture architecture = Architecture::linear;
  std::size_t hidden = 32;  // mlp only
  bool bias = true;
  std::size_t quantiles = 3;
};

std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& name);

/// Named contiguous slice of the flat parameter vector.
struct Block {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
};

/// Partition of the flat parameter vector into named blocks, in order:
/// [hidden.weight, hidden.bias] (mlp only), then per quantile
/// head.q<k>.weight and head.q<k>.bias (bias blocks only when enabled).
class ParameterLayout {
 public:
  explicit ParameterLayout(const ModelSpec& spec);

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(const std::string& name) const;
  std::size_t size() const { return size_; }

  /// Copies each block out of a flat vector.
  std::vector<Vector> split(std::span<const double> flat) const;
  /// Inverse of split.
  Vector join(const std::vector<Vector>& parts) const;

 private:
  std::vector<Block> blocks_;
  std::size_t size_ = 0;
};

/// Zero parameters for the linear model; for the mlp, weights uniform on
/// [-scale, scale] scaled by 1/sqrt(fan_in), biases zero. Deterministic in seed.
Vector initial_parameters(const ModelSpec& spec, std::uint64_t seed, double scale = 1.0);

QuantileForecast forward(const ModelSpec& spec, std::span<const double> params,
                         const FeatureMatrix& features);

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};

/// Total quantile loss sum_k sum_q L_q(y_k, yhat^q_k) and its exact gradient
/// (kink subgradient 0).
LossAndGradient loss_and_gradient(const ModelSpec& spec, std::span<const double> params,
                                  const FeatureMatrix& features, std::span<const double> targets,
                                  std::span<const double> quantiles = kDefaultQuantiles);

double total_quantile_loss(const QuantileForecast& forecast, std::span<const double> targets,
                           std::span<const double> quantiles);

struct FiniteDiffReport {
  double max_relative_error = 0.0;
  std::optional<std::size_t> worst_coordinate;
  std::size_t checked = 0;
  std::size_t kink_excluded = 0;
};

/// Central-difference check of an analytic gradient on a set of coordinates
/// (all when `coordinates` is empty). The relative error of a coordinate is
/// |analytic - numeric| / max(1, |analytic|, |numeric|). `crosses_kink`, when
/// given, is asked about each (x - eps e_i, x + eps e_i) pair; flagged
/// coordinates are excluded and counted.
FiniteDiffReport finite_diff_check(
    const std::function<double(std::span<const double>)>& objective, std::span<const double> params,
    std::span<const double> analytic_gradient, double epsilon,
    std::span<const std::size_t> coordinates = {},
    const std::function<bool(std::span<const double>, std::span<const double>)>& crosses_kink = {});

/// Checks loss_and_gradient against central differences; a coordinate is
/// excluded when any forecast changes side of its target between the two
/// perturbed evaluations.
FiniteDiffReport finite_diff_check(const ModelSpec& spec, std::span<const double> params,
                                   const FeatureMatrix& features, std::span<const double> targets,
                                   double epsilon, std::span<const std::size_t> coordinates = {},
                                   std::span<const double> quantiles = kDefaultQuantiles);

}  // namespace driftsgd::model
