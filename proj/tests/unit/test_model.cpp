#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "driftsgd/errors.hpp"
#include "driftsgd/losses.hpp"
#include "driftsgd/model.hpp"

using namespace driftsgd;
using namespace driftsgd::model;

namespace {

std::vector<Timestamp> hours_from(Timestamp first, std::size_t n = kHistoryHours) {
  std::vector<Timestamp> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(first + std::chrono::hours{static_cast<long>(i)});
  return out;
}

FeatureMatrix random_features(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> loads(kHistoryHours);
  for (double& v : loads) v = n(rng);
  return encode_features(loads, hours_from(make_timestamp(2011, 3, 5, 7)), {});
}

Vector random_vector(std::size_t size, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(size);
  for (double& x : v) x = n(rng);
  return v;
}

}  // namespace

TEST_CASE("feature layout") {
  // 2010-10-01 was a Friday
  const auto stamps = hours_from(make_timestamp(2010, 10, 1, 5));
  std::vector<double> loads(kHistoryHours, 1200.0);
  const FeatureMatrix m = encode_features(loads, stamps, {1200.0, 50.0});
  CHECK(m.values.size() == 48 * 44);
  CHECK(m.at(0, kHourOffset + 5) == 1.0);
  CHECK(m.at(0, kWeekdayOffset + 4) == 1.0);
  CHECK(m.at(0, kMonthOffset + 9) == 1.0);
  for (std::size_t r = 0; r < kHistoryHours; ++r) {
    CHECK(m.at(r, kLoadColumn) == 0.0);
    double hours = 0, days = 0, months = 0;
    for (std::size_t c = 0; c < 24; ++c) hours += m.at(r, kHourOffset + c);
    for (std::size_t c = 0; c < 7; ++c) days += m.at(r, kWeekdayOffset + c);
    for (std::size_t c = 0; c < 12; ++c) months += m.at(r, kMonthOffset + c);
    CHECK(hours == 1.0);
    CHECK(days == 1.0);
    CHECK(months == 1.0);
  }
  // the window runs into Saturday
  CHECK(m.at(19, kHourOffset + 0) == 1.0);
  CHECK(m.at(19, kWeekdayOffset + 5) == 1.0);
}

TEST_CASE("feature encoding rejects bad windows") {
  std::vector<double> loads(kHistoryHours, 1.0);
  auto stamps = hours_from(make_timestamp(2010, 1, 1, 0));
  stamps[10] += std::chrono::hours{1};
  CHECK_THROWS_AS(encode_features(loads, stamps, {}), DataError);
  std::vector<double> short_loads(47, 1.0);
  CHECK_THROWS_AS(encode_features(short_loads, hours_from(make_timestamp(2010, 1, 1, 0), 47), {}), DataError);
}

TEST_CASE("parameter layout") {
  const ModelSpec linear{Architecture::linear};
  const ModelSpec mlp{Architecture::mlp, 8};
  const ParameterLayout lin(linear), net(mlp);
  CHECK(lin.size() == 3 * (24 * kInputSize + 24));
  CHECK(net.size() == 8 * kInputSize + 8 + 3 * (24 * 8 + 24));
  CHECK(net.blocks().front().name == "hidden.weight");
  CHECK(net.block("head.q2.bias").size() == 24);
  CHECK_THROWS_AS(net.block("nope"), ConfigError);

  std::mt19937_64 rng(3);
  const Vector flat = random_vector(net.size(), rng);
  CHECK(net.join(net.split(flat)) == flat);
  CHECK_THROWS_AS(net.split(Vector(5)), ConfigError);

  CHECK(ParameterLayout(ModelSpec{Architecture::linear, 32, false}).size() == 3 * 24 * kInputSize);
}

TEST_CASE("initial parameters") {
  const ModelSpec mlp{Architecture::mlp, 8};
  CHECK(initial_parameters(mlp, 1) == initial_parameters(mlp, 1));
  CHECK(initial_parameters(mlp, 1) != initial_parameters(mlp, 2));
  const Vector lin = initial_parameters(ModelSpec{}, 1);
  CHECK(std::all_of(lin.begin(), lin.end(), [](double v) { return v == 0.0; }));
  const ParameterLayout layout(mlp);
  const Vector p = initial_parameters(mlp, 4);
  const Block& hb = layout.block("hidden.bias");
  for (std::size_t i = 0; i < hb.size(); ++i) CHECK(p[hb.offset + i] == 0.0);
  const double limit = 1.0 / std::sqrt(static_cast<double>(kInputSize));
  const Block& hw = layout.block("hidden.weight");
  for (std::size_t i = 0; i < hw.size(); ++i) CHECK(std::abs(p[hw.offset + i]) <= limit);
}

TEST_CASE("forward basics") {
  std::mt19937_64 rng(5);
  const FeatureMatrix x = random_features(rng);

  SUBCASE("zero parameters") {
    const ModelSpec no_bias{Architecture::linear, 32, false};
    const auto f = forward(no_bias, Vector(ParameterLayout(no_bias).size(), 0.0), x);
    CHECK(f.values == Vector(72, 0.0));

    const ModelSpec biased{};
    const ParameterLayout layout(biased);
    Vector p(layout.size(), 0.0);
    p[layout.block("head.q1.bias").offset + 3] = 2.5;
    const auto g = forward(biased, p, x);
    CHECK(g.at(1, 3) == 2.5);
    CHECK(g.at(0, 3) == 0.0);
  }
  SUBCASE("linear model is homogeneous without bias") {
    const ModelSpec spec{Architecture::linear, 32, false};
    Vector p = random_vector(ParameterLayout(spec).size(), rng, 0.01);
    const auto a = forward(spec, p, x);
    for (double& v : p) v *= 3.0;
    const auto b = forward(spec, p, x);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == doctest::Approx(3.0 * a.values[i]));
  }
  SUBCASE("deterministic") {
    const ModelSpec spec{Architecture::mlp, 16};
    const Vector p = initial_parameters(spec, 9);
    CHECK(forward(spec, p, x).values == forward(spec, p, x).values);
  }
  SUBCASE("layout mismatch") { CHECK_THROWS_AS(forward(ModelSpec{}, Vector(10), x), ConfigError); }
}

TEST_CASE("forward matches the golden file") {
  std::ifstream in(std::string(DRIFTSGD_FIXTURE_DIR) + "/golden_forward.txt");
  REQUIRE(in);
  std::vector<double> golden;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') golden.push_back(std::stod(line));
  REQUIRE(golden.size() == 144);

  FeatureMatrix x;
  for (std::size_t i = 0; i < kInputSize; ++i) x.values[i] = 0.5 * std::cos(0.11 * static_cast<double>(i));
  auto params = [](std::size_t n) {
    Vector p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = 0.05 * std::sin(0.37 * static_cast<double>(i) + 0.1);
    return p;
  };

  const ModelSpec linear{};
  const ModelSpec mlp{Architecture::mlp, 4};
  const auto a = forward(linear, params(ParameterLayout(linear).size()), x);
  const auto b = forward(mlp, params(ParameterLayout(mlp).size()), x);
  for (std::size_t i = 0; i < 72; ++i) {
    CHECK(a.values[i] == doctest::Approx(golden[i]).epsilon(1e-12));
    CHECK(b.values[i] == doctest::Approx(golden[72 + i]).epsilon(1e-12));
  }
}

TEST_CASE("loss and gradient") {
  std::mt19937_64 rng(7);
  const FeatureMatrix x = random_features(rng);

  SUBCASE("exact fit has zero loss and zero head gradient") {
    const ModelSpec spec{};
    const ParameterLayout layout(spec);
    Vector p(layout.size(), 0.0);
    const Vector targets(24, 0.0);
    const auto lg = loss_and_gradient(spec, p, x, targets);
    CHECK(lg.loss == 0.0);
    CHECK(squared_norm(lg.gradient) == 0.0);
  }
  SUBCASE("hand chain rule for one median head") {
    const ModelSpec spec{Architecture::linear, 32, false, 1};
    const ParameterLayout layout(spec);
    const Vector p(layout.size(), 0.0);
    Vector targets(24, 0.0);
    targets[0] = 1.0;  // forecast 0 < target for k = 0; exact elsewhere
    const std::vector<double> q{0.5};
    const auto lg = loss_and_gradient(spec, p, x, targets, q);
    CHECK(lg.loss == doctest::Approx(0.5));
    for (std::size_t i = 0; i < kInputSize; ++i) CHECK(lg.gradient[i] == doctest::Approx(-0.5 * x.values[i]));
    for (std::size_t i = kInputSize; i < lg.gradient.size(); ++i) CHECK(lg.gradient[i] == 0.0);
  }
  SUBCASE("loss matches total quantile loss of the forecast") {
    const ModelSpec spec{Architecture::mlp, 8};
    const Vector p = initial_parameters(spec, 2);
    const Vector targets = random_vector(24, rng);
    const auto lg = loss_and_gradient(spec, p, x, targets);
    CHECK(lg.loss == doctest::Approx(total_quantile_loss(forward(spec, p, x), targets, kDefaultQuantiles)));
  }
  SUBCASE("errors") {
    const ModelSpec spec{};
    Vector p(ParameterLayout(spec).size(), 0.0);
    Vector targets(24, 0.0);
    targets[5] = std::nan("");
    CHECK_THROWS_AS(loss_and_gradient(spec, p, x, targets), NumericError);
    CHECK_THROWS_AS(loss_and_gradient(spec, p, x, Vector(23, 0.0)), ConfigError);
  }
}

TEST_CASE("finite differences agree with the analytic gradient") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const ModelSpec spec{Architecture::mlp, 6};
    const FeatureMatrix x = random_features(rng);
    const Vector p = initial_parameters(spec, static_cast<std::uint64_t>(trial), 2.0);
    const Vector targets = random_vector(24, rng);
    std::vector<std::size_t> coords;
    std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
    for (int k = 0; k < 200; ++k) coords.push_back(pick(rng));
    const auto report = finite_diff_check(spec, p, x, targets, 1e-5, coords);
    CHECK(report.checked + report.kink_excluded == coords.size());
    CHECK(report.max_relative_error <= 1e-5);
  }
}

TEST_CASE("generic finite-difference checker") {
  // quadratic surrogate on a linear model: central differences are exact up to rounding
  std::mt19937_64 rng(13);
  const Vector a = random_vector(30, rng), p = random_vector(30, rng);
  auto objective = [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += 0.5 * (x[i] - a[i]) * (x[i] - a[i]);
    return s;
  };
  Vector grad(30);
  for (std::size_t i = 0; i < 30; ++i) grad[i] = p[i] - a[i];
  const auto ok = finite_diff_check(objective, p, grad, 1e-4);
  CHECK(ok.checked == 30);
  CHECK(ok.max_relative_error <= 1e-9);

  grad[17] += 1.0;
  const auto bad = finite_diff_check(objective, p, grad, 1e-4);
  REQUIRE(bad.worst_coordinate);
  CHECK(*bad.worst_coordinate == 17);

  CHECK_THROWS_AS(finite_diff_check(objective, p, grad, 0.0), ConfigError);

  const auto flagged = finite_diff_check(objective, p, grad, 1e-4, {},
                                         [](std::span<const double>, std::span<const double>) { return true; });
  CHECK(flagged.checked == 0);
  CHECK(flagged.kink_excluded == 30);
}

TEST_CASE("kink crossings are excluded") {
  // linear median head with the forecast sitting exactly on its target
  const ModelSpec spec{Architecture::linear, 32, true, 1};
  const ParameterLayout layout(spec);
  FeatureMatrix x;
  x.values[0] = 1.0;
  const Vector p(layout.size(), 0.0);
  const Vector targets(24, 0.0);
  const std::size_t coord = 0;  // moves forecast k = 0 across its target
  const auto report = finite_diff_check(spec, p, x, targets, 1e-6, std::span(&coord, 1), std::vector<double>{0.5});
  CHECK(report.kink_excluded == 1);
  CHECK(report.checked == 0);
}
