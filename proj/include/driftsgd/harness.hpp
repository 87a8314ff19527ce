#pragma once

// Online forecasting experiments: monthly update loop, QL_grand metric,
// parallel sweeps and result emission.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftsgd/data.hpp"
#include "driftsgd/model.hpp"
#include "driftsgd/optim.hpp"

namespace driftsgd::harness {

struct DataSource {
  std::string kind = "synthetic";  // "synthetic" or "csv"
  std::filesystem::path path;      // csv only
  data::DriftSpec drift;           // synthetic only
  int months = 24;                 // synthetic only
};

struct ExperimentConfig {
  optim::Method method = optim::Method::dts;
  std::size_t window = 100;
  double alpha = 0.99;
  double eta0 = 1.0;
  bool schedule = true;  // eta_t = eta0 / sqrt(update index)
  int epochs = 1;        // offline only
  double momentum_decay = 0.9;
  model::ModelSpec model;
  std::vector<double> quantiles = model::kDefaultQuantiles;
  DataSource data;
  std::uint64_t seed = 0;
  // "27m", "15m", or "last:N" for the trailing N months of the series.
  std::string test_span = "last:6";
  // "mean" divides each sample's total quantile loss by horizon * quantiles
  // before differentiating; "sum" uses the total as is.
  std::string reduction = "mean";
  double init_scale = 1.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct UpdateRecord {
  long update = 0;  // 1-based monthly update index
  YearMonth month;
  std::size_t steps = 0;  // optimizer steps taken in this update
  double ql_grand = 0.0;
  std::vector<double> monthly_losses;  // one per test month
  std::size_t oracle_calls = 0;
  double wall_time_s = 0.0;
};

struct MetricsLedger {
  ExperimentConfig config;
  std::vector<UpdateRecord> updates;
  std::optional<long> first_nan_step;
  std::size_t skipped_windows = 0;

  double cumulative_ql_grand() const;
  std::size_t total_oracle_calls() const;
  bool completed_with_nan() const { return first_nan_step.has_value(); }
};

/// Forecasts and actuals of one test month, both in load units.
struct MonthEvaluation {
  std::vector<model::QuantileForecast> forecasts;
  std::vector<Vector> actuals;
};

/// Mean over months of sum_windows sum_k sum_q L_q. DataError on misalignment.
double ql_grand(std::span<const MonthEvaluation> months, std::span<const double> quantiles);

/// Loads or generates the configured series.
data::Series resolve_series(const DataSource& source);

MetricsLedger run_online_experiment(const ExperimentConfig& config);
MetricsLedger run_online_experiment(const ExperimentConfig& config, std::span<const data::HourlyRecord> series);

/// Seed of the index-th run of a sweep.
std::uint64_t derive_seed(std::uint64_t base, std::size_t index);

struct SweepResult {
  ExperimentConfig config;  // with the derived seed
  std::optional<MetricsLedger> ledger;
  std::string error;
};

/// Runs every config (seed replaced by derive_seed(seed, index)) on up to
/// max_parallel threads. Results keep input order; a failing run is recorded
/// and does not stop the others.
std::vector<SweepResult> sweep(const std::vector<ExperimentConfig>& configs, std::size_t max_parallel);

enum class ResultFormat { csv, json };

/// CSV: one row per (ledger, update). JSON: array of {config, ledger}.
/// Wall times are written only when `timing` is set, so untimed output is
/// byte-for-byte reproducible.
std::string results_csv(std::span<const MetricsLedger> ledgers, bool timing = false);
std::string results_json(std::span<const MetricsLedger> ledgers, bool timing = false);
std::vector<MetricsLedger> parse_results_json(const std::string& text);
void emit_results(std::span<const MetricsLedger> ledgers, const std::filesystem::path& path,
                  ResultFormat format, bool timing = false);

}  // namespace driftsgd::harness
