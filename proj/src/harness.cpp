#include "driftsgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "driftsgd/errors.hpp"

namespace driftsgd::harness {

namespace {

using Clock = std::chrono::steady_clock;

struct Sample {
  model::FeatureMatrix features;
  Vector targets;      // standardized
  Vector raw_targets;  // load units
  YearMonth month;     // month of the first target hour
};

struct SampleSet {
  std::vector<Sample> samples;
  std::size_t skipped = 0;
};

model::Standardization fit_standardization(std::span<const data::HourlyRecord> window) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& r : window) {
    if (r.load_missing) continue;
    sum += r.load;
    sq += r.load * r.load;
    ++n;
  }
  if (n == 0) throw DataError("initial training window has no load values");
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(sq / static_cast<double>(n) - mean * mean, 0.0);
  const double scale = std::sqrt(var);
  return {mean, scale > 0.0 ? scale : 1.0};
}

// One sample per midnight with 48 hours of history and a full 24-hour target.
SampleSet build_samples(std::span<const data::HourlyRecord> series, const model::Standardization& z) {
  SampleSet out;
  std::vector<double> loads(model::kHistoryHours);
  std::vector<Timestamp> stamps(model::kHistoryHours);
  for (std::size_t i = model::kHistoryHours; i + model::kHorizon <= series.size(); ++i) {
    if (hour_of_day(series[i].timestamp) != 0) continue;
    bool missing = false;
    for (std::size_t k = i - model::kHistoryHours; k < i + model::kHorizon; ++k) missing |= series[k].load_missing;
    if (missing) {
      ++out.skipped;
      continue;
    }
    for (std::size_t r = 0; r < model::kHistoryHours; ++r) {
      loads[r] = series[i - model::kHistoryHours + r].load;
      stamps[r] = series[i - model::kHistoryHours + r].timestamp;
    }
    Sample s;
    s.features = model::encode_features(loads, stamps, z);
    s.raw_targets.resize(model::kHorizon);
    s.targets.resize(model::kHorizon);
    for (std::size_t k = 0; k < model::kHorizon; ++k) {
      s.raw_targets[k] = series[i + k].load;
      s.targets[k] = z.apply(series[i + k].load);
    }
    s.month = year_month_of(series[i].timestamp);
    out.samples.push_back(std::move(s));
  }
  return out;
}

data::TestSpan resolve_test_span(const std::string& spec, std::span<const data::HourlyRecord> series) {
  if (spec.rfind("last:", 0) == 0) return data::trailing_test_span(series, std::stoi(spec.substr(5)));
  return data::test_span_preset(spec);
}

optim::OptimizerState initial_state(const ExperimentConfig& c, Vector x0) {
  switch (c.method) {
    case optim::Method::sgd: return optim::make_sgd_state(std::move(x0));
    case optim::Method::momentum: return optim::make_momentum_state(std::move(x0));
    case optim::Method::sts: return optim::make_sts_state(std::move(x0), c.window);
    case optim::Method::dts: return optim::make_dts_state(std::move(x0), c.window, c.alpha);
    case optim::Method::offline: return {std::move(x0), 0, optim::OfflinePayload{}};
  }
  throw ConfigError("unknown method");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (window < 1) throw ConfigError("window must be at least 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(eta0 > 0.0)) throw ConfigError("eta0 must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (quantiles.size() != model.quantiles) throw ConfigError("quantile set does not match model heads");
  for (double q : quantiles)
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantiles must lie in (0, 1)");
  if (reduction != "mean" && reduction != "sum") throw ConfigError("reduction must be mean or sum");
  if (data.kind != "synthetic" && data.kind != "csv") throw ConfigError("data kind must be synthetic or csv");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json data{{"kind", c.data.kind}};
  if (c.data.kind == "csv") data["path"] = c.data.path.string();
  else {
    data["drift"] = c.data.drift;
    data["months"] = c.data.months;
  }
  j = {{"method", optim::to_string(c.method)},
       {"window", c.window},
       {"alpha", c.alpha},
       {"eta0", c.eta0},
       {"schedule", c.schedule},
       {"epochs", c.epochs},
       {"momentum_decay", c.momentum_decay},
       {"model",
        {{"architecture", model::to_string(c.model.architecture)},
         {"hidden", c.model.hidden},
         {"bias", c.model.bias}}},
       {"quantiles", c.quantiles},
       {"data", data},
       {"seed", c.seed},
       {"test_span", c.test_span},
       {"reduction", c.reduction},
       {"init_scale", c.init_scale}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (j.contains("method")) c.method = optim::parse_method(j.at("method").get<std::string>());
  c.window = j.value("window", c.window);
  c.alpha = j.value("alpha", c.alpha);
  c.eta0 = j.value("eta0", c.eta0);
  c.schedule = j.value("schedule", c.schedule);
  c.epochs = j.value("epochs", c.epochs);
  c.momentum_decay = j.value("momentum_decay", c.momentum_decay);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("architecture"))
      c.model.architecture = model::parse_architecture(m.at("architecture").get<std::string>());
    c.model.hidden = m.value("hidden", c.model.hidden);
    c.model.bias = m.value("bias", c.model.bias);
  }
  if (j.contains("quantiles")) c.quantiles = j.at("quantiles").get<std::vector<double>>();
  c.model.quantiles = c.quantiles.size();
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.data.kind = d.value("kind", c.data.kind);
    if (d.contains("path")) c.data.path = d.at("path").get<std::string>();
    if (d.contains("drift")) c.data.drift = d.at("drift").get<data::DriftSpec>();
    c.data.months = d.value("months", c.data.months);
  }
  c.seed = j.value("seed", c.seed);
  c.test_span = j.value("test_span", c.test_span);
  c.reduction = j.value("reduction", c.reduction);
  c.init_scale = j.value("init_scale", c.init_scale);
}

double MetricsLedger::cumulative_ql_grand() const {
  double total = 0.0;
  for (const auto& u : updates) total += u.ql_grand;
  return total;
}

std::size_t MetricsLedger::total_oracle_calls() const {
  std::size_t total = 0;
  for (const auto& u : updates) total += u.oracle_calls;
  return total;
}

double ql_grand(std::span<const MonthEvaluation> months, std::span<const double> quantiles) {
  if (months.empty()) throw DataError("QL_grand needs at least one test month");
  double total = 0.0;
  for (const MonthEvaluation& m : months) {
    if (m.forecasts.size() != m.actuals.size())
      throw DataError("forecasts and actuals are not aligned");
    double month_loss = 0.0;
    for (std::size_t i = 0; i < m.forecasts.size(); ++i) {
      if (m.forecasts[i].quantiles != quantiles.size() || m.actuals[i].size() != model::kHorizon)
        throw DataError("forecast shape does not match actuals");
      month_loss += model::total_quantile_loss(m.forecasts[i], m.actuals[i], quantiles);
    }
    total += month_loss;
  }
  return total / static_cast<double>(months.size());
}

data::Series resolve_series(const DataSource& source) {
  if (source.kind == "csv") return data::load_gefcom_csv(source.path).records;
  if (source.kind == "synthetic") return data::synth_drift_demand(source.drift, source.months);
  throw ConfigError("unknown data source '" + source.kind + "'");
}

MetricsLedger run_online_experiment(const ExperimentConfig& config) {
  const data::Series series = resolve_series(config.data);
  return run_online_experiment(config, series);
}

MetricsLedger run_online_experiment(const ExperimentConfig& config,
                                    std::span<const data::HourlyRecord> series) {
  config.validate();
  MetricsLedger ledger;
  ledger.config = config;
  if (series.empty()) return ledger;

  const auto chunks = data::monthly_stream(series, year_month_of(series.front().timestamp));
  const model::Standardization z = fit_standardization(chunks.front().records);
  const SampleSet set = build_samples(series, z);
  ledger.skipped_windows = set.skipped;

  const data::TestSpan span = resolve_test_span(config.test_span, series);
  std::vector<std::vector<std::size_t>> test_samples(static_cast<std::size_t>(span.months));
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    const int offset = span.first.months_until(set.samples[i].month);
    if (offset >= 0 && offset < span.months) test_samples[static_cast<std::size_t>(offset)].push_back(i);
  }

  const model::ModelSpec& spec = config.model;
  const double reduction = config.reduction == "mean"
                               ? 1.0 / static_cast<double>(model::kHorizon * config.quantiles.size())
                               : 1.0;
  auto sample_gradient = [&](std::size_t idx, std::span<const double> x) {
    const Sample& s = set.samples[idx];
    model::LossAndGradient lg = model::loss_and_gradient(spec, x, s.features, s.targets, config.quantiles);
    for (double& g : lg.gradient) g *= reduction;
    return lg.gradient;
  };

  const Vector x0 = model::initial_parameters(spec, config.seed, config.init_scale);
  optim::OptimizerState state = initial_state(config, x0);
  std::vector<std::size_t> seen;  // sample index per optimizer step / arrival order
  bool diverged = false;
  std::size_t next_sample = 0;

  for (std::size_t t = 1; t <= chunks.size(); ++t) {
    const auto start = Clock::now();
    const YearMonth month = chunks[t - 1].month;
    const double eta = config.schedule ? optim::lr_schedule(config.eta0, static_cast<long>(t)) : config.eta0;

    UpdateRecord rec;
    rec.update = static_cast<long>(t);
    rec.month = month;

    std::vector<std::size_t> arrivals;
    while (next_sample < set.samples.size() && set.samples[next_sample].month <= month)
      arrivals.push_back(next_sample++);

    if (config.method == optim::Method::offline) {
      seen.insert(seen.end(), arrivals.begin(), arrivals.end());
      if (!seen.empty() && !diverged) {
        auto grad = [&](std::size_t i, std::span<const double> x) { return sample_gradient(seen[i], x); };
        try {
          state.x = optim::offline_retrain(seen.size(), grad, x0, config.epochs, eta,
                                           derive_seed(config.seed, t));
        } catch (const NumericError&) {
          diverged = true;
          ledger.first_nan_step = static_cast<long>(t);
        }
        rec.steps = seen.size() * static_cast<std::size_t>(config.epochs);
        rec.oracle_calls = rec.steps;
      }
    } else {
      for (std::size_t idx : arrivals) {
        seen.push_back(idx);
        if (diverged) continue;
        const long step = static_cast<long>(seen.size());
        try {
          optim::StepReport report;
          switch (config.method) {
            case optim::Method::sgd: report = optim::sgd_step(state, sample_gradient(idx, state.x), eta); break;
            case optim::Method::momentum:
              report = optim::momentum_step(state, sample_gradient(idx, state.x), eta, config.momentum_decay);
              break;
            case optim::Method::dts: report = optim::dts_sgd_step(state, sample_gradient(idx, state.x), eta); break;
            case optim::Method::sts:
              report = optim::sts_sgd_step(
                  state,
                  [&](long s, std::span<const double> x) {
                    if (s < 1 || s > static_cast<long>(seen.size()))
                      throw HistoryError("no sample for loss index " + std::to_string(s));
                    return sample_gradient(seen[static_cast<std::size_t>(s - 1)], x);
                  },
                  eta);
              break;
            case optim::Method::offline: break;
          }
          ++rec.steps;
          rec.oracle_calls += report.oracle_calls;
          if (!all_finite(state.x)) {
            diverged = true;
            ledger.first_nan_step = step;
          }
        } catch (const NumericError&) {
          diverged = true;
          ledger.first_nan_step = step;
        }
      }
    }

    if (span.months > 0) {
      std::vector<MonthEvaluation> evals(test_samples.size());
      for (std::size_t m = 0; m < test_samples.size(); ++m) {
        for (std::size_t idx : test_samples[m]) {
          const Sample& s = set.samples[idx];
          model::QuantileForecast f = model::forward(spec, state.x, s.features);
          for (double& v : f.values) v = z.invert(v);
          evals[m].forecasts.push_back(std::move(f));
          evals[m].actuals.push_back(s.raw_targets);
        }
      }
      rec.monthly_losses.reserve(evals.size());
      for (const auto& e : evals) rec.monthly_losses.push_back(ql_grand(std::span(&e, 1), config.quantiles));
      rec.ql_grand = diverged ? std::numeric_limits<double>::quiet_NaN() : ql_grand(evals, config.quantiles);
      if (diverged)
        for (double& v : rec.monthly_losses) v = std::numeric_limits<double>::quiet_NaN();
    }
    rec.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
    ledger.updates.push_back(std::move(rec));
  }
  return ledger;
}

std::uint64_t derive_seed(std::uint64_t base, std::size_t index) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<SweepResult> sweep(const std::vector<ExperimentConfig>& configs, std::size_t max_parallel) {
  if (configs.empty()) throw ConfigError("sweep needs at least one config");
  std::vector<SweepResult> results(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    results[i].config = configs[i];
    results[i].config.seed = derive_seed(configs[i].seed, i);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      try {
        results[i].ledger = run_online_experiment(results[i].config);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(max_parallel, 1, configs.size());
  std::vector<std::jthread> pool;
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  pool.clear();  // joins
  return results;
}

}  // namespace driftsgd::harness
