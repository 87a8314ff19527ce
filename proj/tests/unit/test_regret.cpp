#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "driftsgd/errors.hpp"
#include "driftsgd/losses.hpp"
#include "driftsgd/online_run.hpp"
#include "driftsgd/regret.hpp"
#include "driftsgd/toy.hpp"

using namespace driftsgd;
using namespace driftsgd::regret;
using toy::Rational;

namespace {

// The drifting-quadratic example, built independently of toy_table().
BasicRegretLedger<Rational> toy_ledger(const std::vector<Rational>& xs) {
  BasicRegretLedger<Rational> l;
  for (std::size_t t = 1; t <= xs.size(); ++t) {
    const Rational c(static_cast<long long>(t));
    const Rational d = xs[t - 1] - c;
    l.append({xs[t - 1]}, d * d, {Rational(2) * d});
  }
  return l;
}

auto toy_grad = [](long s, const std::vector<Rational>& x) {
  return std::vector<Rational>{Rational(2) * (x[0] - Rational(static_cast<long long>(s)))};
};

const std::vector<Rational> kOracle{Rational(1), Rational(2), Rational(3)};
const std::vector<Rational> kStale{Rational(1), Rational(3, 2), Rational(2)};

}  // namespace

TEST_CASE("toy example in exact arithmetic") {
  auto oracle = toy_ledger(kOracle);
  auto stale = toy_ledger(kStale);
  CHECK(dynamic_local_regret(oracle, 3, Rational(1)) == Rational(0));
  CHECK(dynamic_local_regret(stale, 3, Rational(1)) == Rational(10, 9));
  CHECK(static_local_regret(oracle, 3, toy_grad) == Rational(40, 9));
  CHECK(static_local_regret(stale, 3, toy_grad) == Rational(0));
  const Comparator<Rational> best{{Rational(2)}, Rational(2)};
  CHECK(standard_regret(oracle, best) == Rational(-2));
  CHECK(standard_regret(stale, best) == Rational(-3, 4));
}

TEST_CASE("toy table module agrees and keeps the orderings") {
  const auto t = toy::toy_table();
  CHECK(t.oracle.dynamic_local_regret == Rational(0));
  CHECK(t.stale.dynamic_local_regret == Rational(10, 9));
  CHECK(t.oracle.static_local_regret == Rational(40, 9));
  CHECK(t.stale.static_local_regret == Rational(0));
  CHECK(t.oracle.cumulative_loss == Rational(0));
  CHECK(t.stale.cumulative_loss == Rational(5, 4));
  CHECK(t.oracle.standard_regret == Rational(-2));
  CHECK(t.stale.standard_regret == Rational(-3, 4));
  CHECK(t.comparator_argmin == Rational(2));
  CHECK(t.comparator_min == Rational(2));
  CHECK(t.oracle.dynamic_local_regret <= t.stale.dynamic_local_regret);
  CHECK(t.oracle.cumulative_loss <= t.stale.cumulative_loss);
  CHECK(t.stale.static_local_regret <= t.oracle.static_local_regret);

  const std::string text = toy::format_toy_table(t);
  CHECK(text.find("10/9") != std::string::npos);
  CHECK(text.find("40/9") != std::string::npos);
  CHECK(text.find("4/9") != std::string::npos);
  CHECK(text.find("-3/8") != std::string::npos);
}

TEST_CASE("window of one") {
  std::mt19937_64 rng(1);
  auto oracle = losses::sinusoid_family(1.0, losses::random_phases(30, 2), 2);
  optim::OracleRunConfig c{optim::Method::sgd, 1, 1.0, 0.3, 0.9, 30, false};
  auto run = optim::run_on_oracle(oracle, c, {0.0, 0.0});
  double direct = 0.0;
  for (const auto& g : run.ledger.gradients) direct += squared_norm(g);
  auto grad = [&](long s, const Vector& x) { return oracle.grad(s, x); };
  CHECK(dynamic_local_regret(run.ledger, 1, 0.5) == doctest::Approx(direct));
  CHECK(static_local_regret(run.ledger, 1, grad) == doctest::Approx(direct));
}

TEST_CASE("regrets on a real run") {
  auto oracle = losses::with_gaussian_noise(losses::sinusoid_family(1.0, losses::random_phases(100, 3)), 0.3, 4);
  optim::OracleRunConfig c{optim::Method::dts, 10, 0.9, 0.5, 0.9, 100, false};
  auto run = optim::run_on_oracle(oracle, c, {0.0});
  auto grad = [&](long s, const Vector& x) { return oracle.grad(s, x); };

  SUBCASE("nonnegative") {
    CHECK(dynamic_local_regret(run.ledger, 10, 0.9) >= 0.0);
    CHECK(static_local_regret(run.ledger, 10, grad) >= 0.0);
  }
  SUBCASE("missing re-evaluations") {
    CHECK_THROWS_AS(static_local_regret(std::as_const(run.ledger), 5), DataError);
    attach_reevaluations(run.ledger, 4, grad);
    CHECK_THROWS_AS(static_local_regret(std::as_const(run.ledger), 5), DataError);
    CHECK_NOTHROW(static_local_regret(std::as_const(run.ledger), 4));
  }
  SUBCASE("smoothed loss uses the zero padding") {
    const double W = exp_normalizer(10, 0.9);
    CHECK(smoothed_loss(run.ledger, 1, 10, 0.9) == doctest::Approx(run.ledger.losses[0] / W));
    CHECK(smoothed_gradient(run.ledger, 1, 10, 0.9)[0] == doctest::Approx(run.ledger.gradients[0][0] / W));
  }
  SUBCASE("bad parameters") {
    CHECK_THROWS_AS(dynamic_local_regret(run.ledger, 0, 0.9), ConfigError);
    CHECK_THROWS_AS(dynamic_local_regret(run.ledger, 3, 0.0), ConfigError);
    CHECK_THROWS_AS(dynamic_local_regret(run.ledger, 3, 1.1), ConfigError);
    CHECK_THROWS_AS(standard_regret(run.ledger, Comparator<double>{{0.0, 0.0}, 0.0}), ConfigError);
  }
  SUBCASE("ledger csv round-trip") {
    std::stringstream buf;
    write_ledger_csv(buf, run.ledger);
    const RegretLedger back = read_ledger_csv(buf);
    CHECK(back.iterates == run.ledger.iterates);
    CHECK(back.losses == run.ledger.losses);
    CHECK(back.gradients == run.ledger.gradients);
  }
}

TEST_CASE("all gradients zero") {
  RegretLedger l;
  for (int t = 0; t < 5; ++t) l.append({1.0, 2.0}, 3.0, {0.0, 0.0});
  CHECK(dynamic_local_regret(l, 3, 0.7) == 0.0);
}

TEST_CASE("standard regret at the comparator is zero for identical losses") {
  RegretLedger l;
  for (int t = 0; t < 4; ++t) l.append({1.0}, 0.0, {0.0});
  CHECK(standard_regret(l, Comparator<double>{{1.0}, 0.0}) == 0.0);
}

TEST_CASE("grid minimizer") {
  auto toy = [](std::span<const double> x) {
    double s = 0.0;
    for (int c = 1; c <= 3; ++c) s += (x[0] - c) * (x[0] - c);
    return s;
  };
  const auto a = grid_minimizer(toy, {{0.0}, {4.0}}, 1e-3);
  CHECK(a.argmin[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(a.min_value == doctest::Approx(2.0));

  const auto b = grid_minimizer([](std::span<const double> x) { return (x[0] - 1) * (x[0] - 1); }, {{-3.0}, {3.0}}, 1e-3);
  CHECK(b.argmin[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b.min_value == doctest::Approx(0.0));

  const auto c = grid_minimizer([](std::span<const double>) { return 7.0; }, {{-1.0, 2.0}, {1.0, 3.0}}, 0.5);
  CHECK(c.argmin == Vector{-1.0, 2.0});

  CHECK_THROWS_AS(grid_minimizer(toy, {{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, 0.1), UnsupportedError);
}

TEST_CASE("calibration gap") {
  const std::vector<Vector> zero{{1.0, -1.0}, {-1.0, 1.0}};
  const std::vector<Vector> dirs{{1.0, 0.0}, {0.0, 1.0}};
  const auto z = calibration_gap(zero, dirs);
  CHECK(z.sampled_max == 0.0);
  CHECK(z.norm_value == 0.0);

  const std::vector<Vector> one{{1.0, 0.0}};
  const auto o = calibration_gap(one, dirs);
  CHECK(o.sampled_max == doctest::Approx(1.0));
  CHECK(o.norm_value == doctest::Approx(1.0));

  const std::vector<Vector> bad{{1.0, 1.0}};
  CHECK_THROWS_AS(calibration_gap(one, bad), ConfigError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vector> g(4, Vector(3));
    Vector sum(3, 0.0);
    for (auto& v : g)
      for (int j = 0; j < 3; ++j) {
        v[j] = n(rng);
        sum[j] += v[j];
      }
    std::vector<Vector> u;
    for (int k = 0; k < 20; ++k) {
      Vector d{n(rng), n(rng), n(rng)};
      const double len = norm(d);
      for (double& x : d) x /= len;
      u.push_back(d);
    }
    CHECK(calibration_gap(g, u).sampled_max <= calibration_gap(g, u).norm_value + 1e-12);
    const double len = norm(sum);
    for (double& x : sum) x /= len;
    u.push_back(sum);
    const auto gap = calibration_gap(g, u);
    CHECK(std::abs(gap.sampled_max - gap.norm_value) <= 1e-12);
  }
}
