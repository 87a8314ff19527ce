#include "driftsgd/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "driftsgd/errors.hpp"
#include "driftsgd/losses.hpp"

namespace driftsgd::model {

namespace {

void check_layout(const ParameterLayout& layout, std::span<const double> params) {
  if (params.size() != layout.size())
    throw ConfigError("parameter vector has " + std::to_string(params.size()) +
                      " entries, model layout expects " + std::to_string(layout.size()));
}

std::string head_weight(std::size_t q) { return "head.q" + std::to_string(q) + ".weight"; }
std::string head_bias(std::size_t q) { return "head.q" + std::to_string(q) + ".bias"; }

// Hidden activations for the mlp; empty for the linear model.
struct Activations {
  std::vector<double> hidden;
};

std::span<const double> slice(std::span<const double> flat, const Block& b) {
  return flat.subspan(b.offset, b.size());
}

// Shared forward pass; fills `act` with what backprop needs.
QuantileForecast forward_impl(const ModelSpec& spec, const ParameterLayout& layout,
                              std::span<const double> params, const FeatureMatrix& features,
                              Activations& act) {
  std::span<const double> input = features.values;
  if (spec.architecture == Architecture::mlp) {
    const auto w = slice(params, layout.block("hidden.weight"));
    act.hidden.assign(spec.hidden, 0.0);
    for (std::size_t h = 0; h < spec.hidden; ++h) {
      double z = dot(w.subspan(h * kInputSize, kInputSize), features.values);
      if (spec.bias) z += params[layout.block("hidden.bias").offset + h];
      act.hidden[h] = std::tanh(z);
    }
    input = act.hidden;
  }

  QuantileForecast out{spec.quantiles, std::vector<double>(spec.quantiles * kHorizon, 0.0)};
  const std::size_t width = input.size();
  for (std::size_t q = 0; q < spec.quantiles; ++q) {
    const auto w = slice(params, layout.block(head_weight(q)));
    for (std::size_t k = 0; k < kHorizon; ++k) {
      double y = dot(w.subspan(k * width, width), input);
      if (spec.bias) y += params[layout.block(head_bias(q)).offset + k];
      out.values[q * kHorizon + k] = y;
    }
  }
  return out;
}

}  // namespace

std::string to_string(Architecture a) { return a == Architecture::linear ? "linear" : "mlp"; }

Architecture parse_architecture(const std::string& name) {
  if (name == "linear") return Architecture::linear;
  if (name == "mlp") return Architecture::mlp;
  throw ConfigError("unknown model architecture '" + name + "'");
}

FeatureMatrix encode_features(std::span<const double> loads, std::span<const Timestamp> stamps,
                              const Standardization& standardization) {
  if (loads.size() != kHistoryHours || stamps.size() != kHistoryHours)
    throw DataError("feature window needs exactly 48 hourly records");
  if (!(standardization.scale > 0.0)) throw ConfigError("standardization scale must be positive");
  FeatureMatrix m;
  for (std::size_t r = 0; r < kHistoryHours; ++r) {
    if (r > 0 && stamps[r] - stamps[r - 1] != std::chrono::hours{1})
      throw DataError("feature window timestamps are not consecutive at row " + std::to_string(r));
    double* row = m.values.data() + r * kFeatureCount;
    row[kLoadColumn] = standardization.apply(loads[r]);
    row[kHourOffset + static_cast<std::size_t>(hour_of_day(stamps[r]))] = 1.0;
    row[kWeekdayOffset + static_cast<std::size_t>(weekday_index(stamps[r]))] = 1.0;
    row[kMonthOffset + static_cast<std::size_t>(month_index(stamps[r]))] = 1.0;
  }
  return m;
}

ParameterLayout::ParameterLayout(const ModelSpec& spec) {
  if (spec.quantiles == 0) throw ConfigError("model needs at least one quantile head");
  auto add = [this](std::string name, std::size_t rows, std::size_t cols) {
    blocks_.push_back({std::move(name), size_, rows, cols});
    size_ += rows * cols;
  };
  std::size_t head_input = kInputSize;
  if (spec.architecture == Architecture::mlp) {
    if (spec.hidden == 0) throw ConfigError("mlp hidden width must be positive");
    add("hidden.weight", spec.hidden, kInputSize);
    if (spec.bias) add("hidden.bias", spec.hidden, 1);
    head_input = spec.hidden;
  }
  for (std::size_t q = 0; q < spec.quantiles; ++q) {
    add(head_weight(q), kHorizon, head_input);
    if (spec.bias) add(head_bias(q), kHorizon, 1);
  }
}

const Block& ParameterLayout::block(const std::string& name) const {
  for (const Block& b : blocks_)
    if (b.name == name) return b;
  throw ConfigError("no parameter block named '" + name + "'");
}

std::vector<Vector> ParameterLayout::split(std::span<const double> flat) const {
  check_layout(*this, flat);
  std::vector<Vector> parts;
  parts.reserve(blocks_.size());
  for (const Block& b : blocks_) {
    const auto s = slice(flat, b);
    parts.emplace_back(s.begin(), s.end());
  }
  return parts;
}

Vector ParameterLayout::join(const std::vector<Vector>& parts) const {
  if (parts.size() != blocks_.size()) throw ConfigError("block count does not match layout");
  Vector flat(size_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (parts[i].size() != blocks_[i].size())
      throw ConfigError("block '" + blocks_[i].name + "' has the wrong size");
    std::copy(parts[i].begin(), parts[i].end(), flat.begin() + static_cast<long>(blocks_[i].offset));
  }
  return flat;
}

Vector initial_parameters(const ModelSpec& spec, std::uint64_t seed, double scale) {
  const ParameterLayout layout(spec);
  Vector params(layout.size(), 0.0);
  if (spec.architecture == Architecture::linear) return params;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (const Block& b : layout.blocks()) {
    if (b.cols == 1) continue;  // biases
    const double limit = scale / std::sqrt(static_cast<double>(b.cols));
    for (std::size_t i = 0; i < b.size(); ++i) params[b.offset + i] = limit * unit(rng);
  }
  return params;
}

QuantileForecast forward(const ModelSpec& spec, std::span<const double> params,
                         const FeatureMatrix& features) {
  const ParameterLayout layout(spec);
  check_layout(layout, params);
  Activations act;
  return forward_impl(spec, layout, params, features, act);
}

double total_quantile_loss(const QuantileForecast& forecast, std::span<const double> targets,
                           std::span<const double> quantiles) {
  if (targets.size() != kHorizon) throw ConfigError("targets must cover the 24-hour horizon");
  if (quantiles.size() != forecast.quantiles)
    throw ConfigError("quantile set size does not match the forecast");
  double loss = 0.0;
  for (std::size_t q = 0; q < quantiles.size(); ++q)
    for (std::size_t k = 0; k < kHorizon; ++k)
      loss += losses::quantile_loss(targets[k], forecast.at(q, k), quantiles[q]);
  return loss;
}

LossAndGradient loss_and_gradient(const ModelSpec& spec, std::span<const double> params,
                                  const FeatureMatrix& features, std::span<const double> targets,
                                  std::span<const double> quantiles) {
  const ParameterLayout layout(spec);
  check_layout(layout, params);
  if (targets.size() != kHorizon) throw ConfigError("targets must cover the 24-hour horizon");
  if (quantiles.size() != spec.quantiles)
    throw ConfigError("quantile set size does not match the model heads");
  if (!all_finite(params) || !all_finite(features.values) || !all_finite(targets))
    throw NumericError("non-finite value in model inputs");

  Activations act;
  const QuantileForecast out = forward_impl(spec, layout, params, features, act);

  LossAndGradient result;
  result.loss = total_quantile_loss(out, targets, quantiles);
  result.gradient.assign(layout.size(), 0.0);
  std::span<double> grad = result.gradient;

  const bool mlp = spec.architecture == Architecture::mlp;
  std::span<const double> input = mlp ? std::span<const double>(act.hidden) : features.values;
  const std::size_t width = input.size();
  std::vector<double> d_hidden(mlp ? spec.hidden : 0, 0.0);

  for (std::size_t q = 0; q < spec.quantiles; ++q) {
    const Block& wb = layout.block(head_weight(q));
    for (std::size_t k = 0; k < kHorizon; ++k) {
      const double s = losses::quantile_loss_subgradient(targets[k], out.at(q, k), quantiles[q]);
      if (s == 0.0) continue;
      axpy(s, input, grad.subspan(wb.offset + k * width, width));
      if (spec.bias) grad[layout.block(head_bias(q)).offset + k] += s;
      if (mlp) axpy(s, params.subspan(wb.offset + k * width, width), d_hidden);
    }
  }

  if (mlp) {
    const Block& hw = layout.block("hidden.weight");
    for (std::size_t h = 0; h < spec.hidden; ++h) {
      const double dz = d_hidden[h] * (1.0 - act.hidden[h] * act.hidden[h]);
      if (dz == 0.0) continue;
      axpy(dz, features.values, grad.subspan(hw.offset + h * kInputSize, kInputSize));
      if (spec.bias) grad[layout.block("hidden.bias").offset + h] += dz;
    }
  }
  return result;
}

FiniteDiffReport finite_diff_check(
    const std::function<double(std::span<const double>)>& objective, std::span<const double> params,
    std::span<const double> analytic_gradient, double epsilon,
    std::span<const std::size_t> coordinates,
    const std::function<bool(std::span<const double>, std::span<const double>)>& crosses_kink) {
  if (!(epsilon > 0.0)) throw ConfigError("finite-difference epsilon must be positive");
  if (analytic_gradient.size() != params.size())
    throw ConfigError("gradient and parameter sizes differ");

  std::vector<std::size_t> all;
  if (coordinates.empty()) {
    all.resize(params.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    coordinates = all;
  }

  FiniteDiffReport report;
  Vector plus(params.begin(), params.end());
  Vector minus(params.begin(), params.end());
  for (std::size_t i : coordinates) {
    if (i >= params.size()) throw ConfigError("finite-difference coordinate out of range");
    plus[i] = params[i] + epsilon;
    minus[i] = params[i] - epsilon;
    if (crosses_kink && crosses_kink(minus, plus)) {
      ++report.kink_excluded;
    } else {
      const double numeric = (objective(plus) - objective(minus)) / (2.0 * epsilon);
      const double a = analytic_gradient[i];
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++report.checked;
      if (!report.worst_coordinate || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_coordinate = i;
      }
    }
    plus[i] = params[i];
    minus[i] = params[i];
  }
  return report;
}

FiniteDiffReport finite_diff_check(const ModelSpec& spec, std::span<const double> params,
                                   const FeatureMatrix& features, std::span<const double> targets,
                                   double epsilon, std::span<const std::size_t> coordinates,
                                   std::span<const double> quantiles) {
  if (!(epsilon > 0.0)) throw ConfigError("finite-difference epsilon must be positive");
  const LossAndGradient lg = loss_and_gradient(spec, params, features, targets, quantiles);
  auto objective = [&](std::span<const double> p) {
    return total_quantile_loss(forward(spec, p, features), targets, quantiles);
  };
  auto crosses = [&](std::span<const double> lo, std::span<const double> hi) {
    const QuantileForecast a = forward(spec, lo, features);
    const QuantileForecast b = forward(spec, hi, features);
    for (std::size_t q = 0; q < a.quantiles; ++q)
      for (std::size_t k = 0; k < kHorizon; ++k) {
        const double ra = a.at(q, k) - targets[k];
        const double rb = b.at(q, k) - targets[k];
        if (ra == 0.0 || rb == 0.0 || (ra < 0.0) != (rb < 0.0)) return true;
      }
    return false;
  };
  return finite_diff_check(objective, params, lg.gradient, epsilon, coordinates, crosses);
}

}  // namespace driftsgd::model
