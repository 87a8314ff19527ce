// Result emission. CSV columns, in order:
//
//   config_index, method, model, window, alpha, eta0, schedule, epochs,
//   momentum_decay, seed, update, month, steps, ql_grand,
//   cumulative_ql_grand, oracle_calls, wall_time_s, first_nan_step
//
// Reals use shortest round-trip formatting; NaN is written as "nan".
// wall_time_s is empty unless timing was requested and first_nan_step is
// empty for runs that never produced a non-finite value.

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "driftsgd/errors.hpp"
#include "driftsgd/harness.hpp"

namespace driftsgd::harness {

namespace {

std::string real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

nlohmann::json real_json(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double real_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string results_csv(std::span<const MetricsLedger> ledgers, bool timing) {
  std::ostringstream out;
  out << "config_index,method,model,window,alpha,eta0,schedule,epochs,momentum_decay,seed,"
         "update,month,steps,ql_grand,cumulative_ql_grand,oracle_calls,wall_time_s,first_nan_step\n";
  for (std::size_t i = 0; i < ledgers.size(); ++i) {
    const MetricsLedger& l = ledgers[i];
    const ExperimentConfig& c = l.config;
    std::ostringstream prefix;
    prefix << i << ',' << optim::to_string(c.method) << ',' << model::to_string(c.model.architecture) << ','
           << c.window << ',' << real(c.alpha) << ',' << real(c.eta0) << ',' << (c.schedule ? 1 : 0) << ','
           << c.epochs << ',' << real(c.momentum_decay) << ',' << c.seed << ',';
    double cumulative = 0.0;
    for (const UpdateRecord& u : l.updates) {
      cumulative += u.ql_grand;
      out << prefix.str() << u.update << ',' << u.month.to_string() << ',' << u.steps << ','
          << real(u.ql_grand) << ',' << real(cumulative) << ',' << u.oracle_calls << ',';
      if (timing) out << real(u.wall_time_s);
      out << ',';
      if (l.first_nan_step) out << *l.first_nan_step;
      out << '\n';
    }
  }
  return out.str();
}

std::string results_json(std::span<const MetricsLedger> ledgers, bool timing) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MetricsLedger& l : ledgers) {
    nlohmann::json updates = nlohmann::json::array();
    for (const UpdateRecord& u : l.updates) {
      nlohmann::json monthly = nlohmann::json::array();
      for (double v : u.monthly_losses) monthly.push_back(real_json(v));
      nlohmann::json ju{{"update", u.update},
                        {"month", u.month.to_string()},
                        {"steps", u.steps},
                        {"ql_grand", real_json(u.ql_grand)},
                        {"monthly_losses", monthly},
                        {"oracle_calls", u.oracle_calls}};
      if (timing) ju["wall_time_s"] = u.wall_time_s;
      updates.push_back(std::move(ju));
    }
    nlohmann::json ledger{{"updates", updates},
                          {"first_nan_step", l.first_nan_step ? nlohmann::json(*l.first_nan_step) : nullptr},
                          {"skipped_windows", l.skipped_windows},
                          {"cumulative_ql_grand", real_json(l.cumulative_ql_grand())}};
    arr.push_back({{"config", l.config}, {"ledger", ledger}});
  }
  return arr.dump(2) + "\n";
}

std::vector<MetricsLedger> parse_results_json(const std::string& text) {
  const nlohmann::json arr = nlohmann::json::parse(text);
  std::vector<MetricsLedger> out;
  for (const auto& item : arr) {
    MetricsLedger l;
    l.config = item.at("config").get<ExperimentConfig>();
    const auto& jl = item.at("ledger");
    if (!jl.at("first_nan_step").is_null()) l.first_nan_step = jl.at("first_nan_step").get<long>();
    l.skipped_windows = jl.at("skipped_windows").get<std::size_t>();
    for (const auto& ju : jl.at("updates")) {
      UpdateRecord u;
      u.update = ju.at("update").get<long>();
      u.month = YearMonth::parse(ju.at("month").get<std::string>());
      u.steps = ju.at("steps").get<std::size_t>();
      u.ql_grand = real_from(ju.at("ql_grand"));
      for (const auto& v : ju.at("monthly_losses")) u.monthly_losses.push_back(real_from(v));
      u.oracle_calls = ju.at("oracle_calls").get<std::size_t>();
      u.wall_time_s = ju.value("wall_time_s", 0.0);
      l.updates.push_back(std::move(u));
    }
    out.push_back(std::move(l));
  }
  return out;
}

void emit_results(std::span<const MetricsLedger> ledgers, const std::filesystem::path& path,
                  ResultFormat format, bool timing) {
  if (ledgers.empty()) throw ConfigError("no results to emit");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (format == ResultFormat::csv ? results_csv(ledgers, timing) : results_json(ledgers, timing));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace driftsgd::harness
