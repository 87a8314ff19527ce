#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "driftsgd/errors.hpp"
#include "driftsgd/harness.hpp"
#include "driftsgd/losses.hpp"

using namespace driftsgd;
using namespace driftsgd::harness;

namespace {

ExperimentConfig small_config(optim::Method method) {
  ExperimentConfig c;
  c.method = method;
  c.window = 5;
  c.alpha = 0.9;
  c.eta0 = 0.5;
  c.data.months = 3;
  c.data.drift.noise_sigma = 10.0;
  c.data.drift.changepoints = {{1, 80.0}};
  c.test_span = "last:1";
  return c;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("QL_grand") {
  std::vector<double> quantiles{0.1, 0.5, 0.9};
  model::QuantileForecast f{3, std::vector<double>(72, 5.0)};
  Vector actual(24, 5.0);
  const std::vector<MonthEvaluation> perfect{{{f}, {actual}}};
  CHECK(ql_grand(perfect, quantiles) == 0.0);

  // one forecast value off its target: the total equals a single pinball loss
  model::QuantileForecast g{1, std::vector<double>(24, 0.0)};
  Vector y(24, 0.0);
  y[0] = 2.0;
  const std::vector<double> median{0.5};
  const std::vector<MonthEvaluation> one{{{g}, {y}}};
  CHECK(ql_grand(one, median) == doctest::Approx(losses::quantile_loss(2.0, 0.0, 0.5)));

  // months with totals 4 and 6 average to 5
  Vector y4(24, 0.0), y6(24, 0.0);
  y4[0] = 8.0;
  y6[0] = 12.0;
  const std::vector<MonthEvaluation> two{{{g}, {y4}}, {{g}, {y6}}};
  CHECK(ql_grand(two, median) == doctest::Approx(5.0));
  const std::vector<MonthEvaluation> swapped{{{g}, {y6}}, {{g}, {y4}}};
  CHECK(ql_grand(swapped, median) == ql_grand(two, median));

  const std::vector<MonthEvaluation> misaligned{{{g, g}, {y}}};
  CHECK_THROWS_AS(ql_grand(misaligned, median), DataError);
  CHECK_THROWS_AS(ql_grand(std::vector<MonthEvaluation>{}, median), DataError);
}

TEST_CASE("config validation and json") {
  ExperimentConfig c = small_config(optim::Method::sts);
  c.model.architecture = model::Architecture::mlp;
  c.model.hidden = 7;
  c.seed = 42;
  const ExperimentConfig back = nlohmann::json(c).get<ExperimentConfig>();
  CHECK(nlohmann::json(back) == nlohmann::json(c));
  CHECK(back.model.hidden == 7);

  auto bad = c;
  bad.window = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.eta0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.quantiles = {0.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("empty stream gives an empty ledger") {
  const auto ledger = run_online_experiment(small_config(optim::Method::dts), data::Series{});
  CHECK(ledger.updates.empty());
  CHECK_FALSE(ledger.completed_with_nan());
}

TEST_CASE("online run bookkeeping") {
  const ExperimentConfig c = small_config(optim::Method::sts);
  const auto ledger = run_online_experiment(c);
  REQUIRE(ledger.updates.size() == 3);
  std::size_t steps = 0;
  for (const auto& u : ledger.updates) {
    CHECK(u.monthly_losses.size() == 1);
    CHECK(u.ql_grand >= 0.0);
    CHECK(u.ql_grand == doctest::Approx(u.monthly_losses[0]));
    steps += u.steps;
  }
  std::size_t expected = 0;
  for (std::size_t t = 1; t <= steps; ++t) expected += std::min<std::size_t>(t, c.window);
  CHECK(ledger.total_oracle_calls() == expected);
  CHECK_FALSE(ledger.completed_with_nan());
  CHECK(ledger.updates[0].month == YearMonth{2009, 1});

  const auto dts = run_online_experiment(small_config(optim::Method::dts));
  CHECK(dts.total_oracle_calls() == steps);
}

TEST_CASE("dts with w = 1, alpha = 1 reproduces online sgd") {
  ExperimentConfig a = small_config(optim::Method::dts);
  a.window = 1;
  a.alpha = 1.0;
  ExperimentConfig b = small_config(optim::Method::sgd);
  const auto la = run_online_experiment(a), lb = run_online_experiment(b);
  REQUIRE(la.updates.size() == lb.updates.size());
  for (std::size_t i = 0; i < la.updates.size(); ++i) CHECK(la.updates[i].ql_grand == lb.updates[i].ql_grand);
}

TEST_CASE("offline retraining and momentum run") {
  auto c = small_config(optim::Method::offline);
  c.epochs = 2;
  const auto off = run_online_experiment(c);
  REQUIRE(off.updates.size() == 3);
  CHECK(off.updates[1].steps > off.updates[0].steps);
  CHECK(off.updates[2].oracle_calls == off.updates[2].steps);
  const auto mom = run_online_experiment(small_config(optim::Method::momentum));
  CHECK(std::isfinite(mom.cumulative_ql_grand()));
}

TEST_CASE("windows touching a missing load are skipped") {
  auto c = small_config(optim::Method::sgd);
  data::Series s = resolve_series(c.data);
  s[24 * 10 + 3].load_missing = true;
  s[24 * 10 + 3].load = std::nan("");
  const auto ledger = run_online_experiment(c, s);
  // the hour sits in the 48-hour history of two samples and the target of one
  CHECK(ledger.skipped_windows == 3);
}

TEST_CASE("determinism and emission") {
  const ExperimentConfig c = small_config(optim::Method::dts);
  const std::vector<MetricsLedger> first{run_online_experiment(c)};
  const std::vector<MetricsLedger> second{run_online_experiment(c)};
  const std::string csv = results_csv(first);
  CHECK(csv == results_csv(second));

  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  for (const char* col : {"ql_grand", "oracle_calls", "wall_time_s", "first_nan_step", "cumulative_ql_grand"})
    CHECK(header.find(col) != std::string::npos);
  CHECK(count_lines(csv) == 1 + first[0].updates.size());

  const auto parsed = parse_results_json(results_json(first));
  REQUIRE(parsed.size() == 1);
  CHECK(nlohmann::json(parsed[0].config) == nlohmann::json(first[0].config));
  REQUIRE(parsed[0].updates.size() == first[0].updates.size());
  for (std::size_t i = 0; i < parsed[0].updates.size(); ++i) {
    CHECK(parsed[0].updates[i].ql_grand == first[0].updates[i].ql_grand);
    CHECK(parsed[0].updates[i].monthly_losses == first[0].updates[i].monthly_losses);
    CHECK(parsed[0].updates[i].oracle_calls == first[0].updates[i].oracle_calls);
  }
  CHECK(results_json(parsed) == results_json(first));

  const auto dir = std::filesystem::temp_directory_path() / "driftsgd_harness_test";
  std::filesystem::create_directories(dir);
  emit_results(first, dir / "out.csv", ResultFormat::csv);
  std::ifstream in(dir / "out.csv", std::ios::binary);
  std::stringstream written;
  written << in.rdbuf();
  CHECK(written.str() == csv);
  CHECK_THROWS_AS(emit_results(first, dir / "missing" / "dir" / "out.csv", ResultFormat::csv), IoError);
  CHECK_THROWS_AS(emit_results(std::vector<MetricsLedger>{}, dir / "x.csv", ResultFormat::csv), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("NaN metrics serialize as nan and null") {
  MetricsLedger l;
  l.config = small_config(optim::Method::sts);
  l.first_nan_step = 12;
  UpdateRecord u;
  u.update = 1;
  u.month = {2009, 1};
  u.ql_grand = std::nan("");
  u.monthly_losses = {std::nan("")};
  l.updates.push_back(u);
  const std::vector<MetricsLedger> ls{l};
  CHECK(results_csv(ls).find(",nan,") != std::string::npos);
  CHECK(results_csv(ls).find(",12\n") != std::string::npos);
  const auto back = parse_results_json(results_json(ls));
  CHECK(std::isnan(back[0].updates[0].ql_grand));
  CHECK(back[0].first_nan_step == 12);
  CHECK(back[0].completed_with_nan());
}

TEST_CASE("sweep") {
  SUBCASE("one config matches a single run with the derived seed") {
    const ExperimentConfig c = small_config(optim::Method::dts);
    const auto results = sweep({c}, 1);
    REQUIRE(results.size() == 1);
    REQUIRE(results[0].ledger);
    ExperimentConfig seeded = c;
    seeded.seed = derive_seed(c.seed, 0);
    const std::vector<MetricsLedger> direct{run_online_experiment(seeded)};
    const std::vector<MetricsLedger> swept{*results[0].ledger};
    CHECK(results_csv(swept) == results_csv(direct));
  }
  SUBCASE("grid keeps input order, isolates failures and repeats exactly") {
    std::vector<ExperimentConfig> grid;
    for (std::size_t w : {1u, 2u, 4u, 8u})
      for (double eta : {0.1, 0.2, 0.4, 0.8}) {
        ExperimentConfig c = small_config(optim::Method::dts);
        c.data.months = 2;
        c.window = w;
        c.eta0 = eta;
        grid.push_back(c);
      }
    ExperimentConfig broken = grid.front();
    broken.data.kind = "csv";
    broken.data.path = "/nonexistent/series.csv";
    grid.insert(grid.begin() + 3, broken);

    const auto a = sweep(grid, 4);
    const auto b = sweep(grid, 2);
    REQUIRE(a.size() == 17);
    CHECK_FALSE(a[3].ledger);
    CHECK_FALSE(a[3].error.empty());
    std::vector<MetricsLedger> la, lb;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].config.window == grid[i].window);
      CHECK(a[i].config.eta0 == grid[i].eta0);
      if (a[i].ledger) la.push_back(*a[i].ledger);
      if (b[i].ledger) lb.push_back(*b[i].ledger);
    }
    REQUIRE(la.size() == 16);
    CHECK(results_csv(la) == results_csv(lb));
    CHECK(count_lines(results_csv(la)) == 1 + 16 * 2);
  }
  SUBCASE("derived seeds differ per index") {
    CHECK(derive_seed(0, 0) != derive_seed(0, 1));
    CHECK(derive_seed(0, 0) != derive_seed(1, 0));
    CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  }
  CHECK_THROWS_AS(sweep({}, 2), ConfigError);
}
