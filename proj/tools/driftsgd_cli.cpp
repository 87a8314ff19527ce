// driftsgd command-line harness.
//
// Exit codes: 0 clean, 2 completed but some run produced NaN, 1 error
// (including a violated bound in verify-bounds).

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "driftsgd/bounds.hpp"
#include "driftsgd/data.hpp"
#include "driftsgd/errors.hpp"
#include "driftsgd/harness.hpp"
#include "driftsgd/online_run.hpp"
#include "driftsgd/toy.hpp"

namespace {

using namespace driftsgd;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return nlohmann::json::parse(in);
}

struct ConfigFlags {
  std::string config_path;
  std::string method, model, data, test_span, reduction;
  std::optional<std::size_t> window, hidden;
  std::optional<double> alpha, eta, momentum_decay;
  std::optional<int> epochs, months;
  std::optional<std::uint64_t> seed;
  std::optional<bool> schedule;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON experiment config");
    app->add_option("--method", method, "sgd_online | sgd_offline | momentum | sts_sgd | dts_sgd");
    app->add_option("--window", window, "smoothing window w");
    app->add_option("--alpha", alpha, "exponential weight alpha");
    app->add_option("--eta", eta, "initial learning rate");
    app->add_option("--schedule", schedule, "eta / sqrt(t) per monthly update (true/false)");
    app->add_option("--epochs", epochs, "epochs per offline retraining");
    app->add_option("--momentum-decay", momentum_decay, "momentum decay");
    app->add_option("--model", model, "linear | mlp");
    app->add_option("--hidden", hidden, "mlp hidden width");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--data", data, "'synthetic' or a GEFCom-format CSV path");
    app->add_option("--months", months, "synthetic series length in months");
    app->add_option("--test-span", test_span, "27m | 15m | last:N");
    app->add_option("--reduction", reduction, "mean | sum");
  }

  harness::ExperimentConfig resolve() const {
    harness::ExperimentConfig c;
    if (!config_path.empty()) c = read_json_file(config_path).get<harness::ExperimentConfig>();
    if (!method.empty()) c.method = optim::parse_method(method);
    if (window) c.window = *window;
    if (alpha) c.alpha = *alpha;
    if (eta) c.eta0 = *eta;
    if (schedule) c.schedule = *schedule;
    if (epochs) c.epochs = *epochs;
    if (momentum_decay) c.momentum_decay = *momentum_decay;
    if (!model.empty()) c.model.architecture = model::parse_architecture(model);
    if (hidden) c.model.hidden = *hidden;
    if (seed) c.seed = *seed;
    if (!data.empty()) {
      if (data == "synthetic") c.data.kind = "synthetic";
      else {
        c.data.kind = "csv";
        c.data.path = data;
      }
    }
    if (months) c.data.months = *months;
    if (!test_span.empty()) c.test_span = test_span;
    if (!reduction.empty()) c.reduction = reduction;
    c.validate();
    return c;
  }
};

struct OutputFlags {
  std::string out;
  std::string format = "csv";
  bool timing = false;

  void attach(CLI::App* app) {
    app->add_option("--out", out, "output path (stdout when omitted)");
    app->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    app->add_flag("--timing", timing, "write measured wall times (output no longer reproducible)");
  }

  int emit(const std::vector<harness::MetricsLedger>& ledgers) const {
    const auto fmt = format == "json" ? harness::ResultFormat::json : harness::ResultFormat::csv;
    if (out.empty()) {
      std::cout << (fmt == harness::ResultFormat::csv ? harness::results_csv(ledgers, timing)
                                                      : harness::results_json(ledgers, timing));
    } else if (!ledgers.empty()) {
      harness::emit_results(ledgers, out, fmt, timing);
    }
    for (const auto& l : ledgers)
      if (l.completed_with_nan()) return 2;
    return 0;
  }
};

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v)) throw ConfigError("bad list element '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int verify_bounds(const std::string& out_path, int seeds) {
  std::vector<bounds::BoundReport> reports;

  for (auto [w, alpha] : std::vector<std::pair<std::size_t, double>>{{1, 0.5}, {10, 0.99}, {50, 0.999}}) {
    auto oracle = losses::with_gaussian_noise(losses::sinusoid_family(1.0, losses::random_phases(64, 7)), 1.0, 11);
    const Vector x{0.3};
    reports.push_back(bounds::verify_variance_bound(oracle, static_cast<long>(w), x, w, alpha, 100000));
  }

  for (double alpha : {0.9, 0.99}) {
    auto oracle = losses::with_gaussian_noise(losses::sinusoid_family(1.0, losses::random_phases(500, 3)), 0.5, 5);
    optim::OracleRunConfig cfg{optim::Method::dts, 10, alpha, 1.0, 0.9, 500, false};
    const auto run = optim::run_on_oracle(oracle, cfg, Vector{0.0});
    auto [shift, descent] = bounds::verify_smoothed_diffs(oracle, run.ledger, 10, alpha);
    reports.push_back(shift);
    reports.push_back(descent);
  }

  for (std::size_t w : {10, 50, 100})
    for (double sigma : {0.0, 0.5})
      for (int seed = 0; seed < seeds; ++seed) {
        auto family = losses::sinusoid_family(1.0, losses::random_phases(2000, static_cast<std::uint64_t>(seed)));
        auto oracle = losses::with_gaussian_noise(family, sigma, 0);
        reports.push_back(bounds::verify_theorem1(oracle, 2000, w, 0.999, static_cast<std::uint64_t>(seed)));
      }

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw IoError("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  bool violated = false;
  for (const auto& r : reports) {
    out << bounds::to_json(r) << '\n';
    violated |= r.violated;
  }
  std::cerr << reports.size() << " bound checks, " << (violated ? "VIOLATION FOUND" : "no violations") << '\n';
  return violated ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online forecasting with time-smoothed SGD"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  OutputFlags run_out;
  auto* run = app.add_subcommand("run", "run one online experiment");
  run_flags.attach(run);
  run_out.attach(run);

  ConfigFlags sweep_flags;
  OutputFlags sweep_out;
  std::string methods, windows, etas;
  std::size_t max_parallel = 1;
  auto* sweep = app.add_subcommand("sweep", "run a grid of experiments");
  sweep_flags.attach(sweep);
  sweep_out.attach(sweep);
  sweep->add_option("--methods", methods, "comma-separated methods");
  sweep->add_option("--windows", windows, "comma-separated windows");
  sweep->add_option("--etas", etas, "comma-separated initial learning rates");
  sweep->add_option("--max-parallel", max_parallel, "concurrent runs");

  std::string bounds_out;
  int bound_seeds = 10;
  auto* verify = app.add_subcommand("verify-bounds", "check every analytic bound empirically");
  verify->add_option("--out", bounds_out, "JSON-lines output path");
  verify->add_option("--seeds", bound_seeds, "seeds per regret-bound configuration");

  auto* toy = app.add_subcommand("toy-table", "print the drifting-quadratic regret table");

  std::string spec_path, data_out, spec_out;
  int gen_months = 24;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic drifting demand series");
  gen->add_option("--spec", spec_path, "DriftSpec JSON (defaults when omitted)");
  gen->add_option("--months", gen_months, "number of months");
  gen->add_option("--out", data_out, "series CSV path (stdout when omitted)");
  gen->add_option("--spec-out", spec_out, "write the effective DriftSpec JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_out.emit({harness::run_online_experiment(run_flags.resolve())});

    if (*sweep) {
      const harness::ExperimentConfig base = sweep_flags.resolve();
      const auto method_list = methods.empty() ? std::vector<std::string>{optim::to_string(base.method)}
                                               : parse_list<std::string>(methods);
      const auto window_list = windows.empty() ? std::vector<std::size_t>{base.window} : parse_list<std::size_t>(windows);
      const auto eta_list = etas.empty() ? std::vector<double>{base.eta0} : parse_list<double>(etas);
      std::vector<harness::ExperimentConfig> configs;
      for (const auto& m : method_list)
        for (std::size_t w : window_list)
          for (double eta : eta_list) {
            harness::ExperimentConfig c = base;
            c.method = optim::parse_method(m);
            c.window = w;
            c.eta0 = eta;
            configs.push_back(c);
          }
      std::vector<harness::MetricsLedger> ledgers;
      bool failed = false;
      for (auto& r : harness::sweep(configs, max_parallel)) {
        if (r.ledger) ledgers.push_back(std::move(*r.ledger));
        else {
          std::cerr << "run failed (" << optim::to_string(r.config.method) << ", w=" << r.config.window
                    << ", eta=" << r.config.eta0 << "): " << r.error << '\n';
          failed = true;
        }
      }
      const int code = sweep_out.emit(ledgers);
      return failed ? 1 : code;
    }

    if (*verify) return verify_bounds(bounds_out, bound_seeds);

    if (*toy) {
      std::cout << toy::format_toy_table(toy::toy_table());
      return 0;
    }

    if (*gen) {
      data::DriftSpec spec;
      if (!spec_path.empty()) spec = read_json_file(spec_path).get<data::DriftSpec>();
      const data::Series series = data::synth_drift_demand(spec, gen_months);
      if (data_out.empty()) data::write_series_csv(std::cout, series);
      else data::save_series_csv(data_out, series);
      if (!spec_out.empty()) {
        std::ofstream out(spec_out);
        if (!out) throw IoError("cannot write " + spec_out);
        out << nlohmann::json(spec).dump(2) << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
