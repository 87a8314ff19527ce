#include "driftsgd/toy.hpp"

#include <sstream>
#include <vector>

#include "driftsgd/regret.hpp"

namespace driftsgd::toy {

namespace {

constexpr std::size_t kWindow = 3;
const std::vector<Rational> kCenters{1, 2, 3};

Rational loss(long t, const Rational& x) {
  const Rational d = x - kCenters[static_cast<std::size_t>(t - 1)];
  return d * d;
}

Rational grad(long t, const Rational& x) { return 2 * (x - kCenters[static_cast<std::size_t>(t - 1)]); }

PolicyScores score(const std::vector<Rational>& policy, const regret::Comparator<Rational>& comparator) {
  regret::BasicRegretLedger<Rational> ledger;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    const long t = static_cast<long>(i + 1);
    ledger.append({policy[i]}, loss(t, policy[i]), {grad(t, policy[i])});
  }
  PolicyScores s;
  for (const Rational& f : ledger.losses) s.cumulative_loss += f;
  s.standard_regret = regret::standard_regret(ledger, comparator);
  s.dynamic_local_regret = regret::dynamic_local_regret(ledger, kWindow, Rational(1));
  s.static_local_regret = regret::static_local_regret(
      ledger, kWindow,
      [](long t, const std::vector<Rational>& x) { return std::vector<Rational>{grad(t, x[0])}; });
  return s;
}

const char* prefers(const Rational& oracle, const Rational& stale) {
  if (oracle < stale) return "oracle policy is better";
  if (stale < oracle) return "stale policy is better";
  return "tie";
}

}  // namespace

ToyTable toy_table() {
  ToyTable table;
  // sum_t (x - c_t)^2 is minimized at the mean of the centers.
  Rational mean;
  for (const Rational& c : kCenters) mean += c;
  mean /= static_cast<long long>(kCenters.size());
  table.comparator_argmin = mean;
  for (std::size_t t = 1; t <= kCenters.size(); ++t) table.comparator_min += loss(static_cast<long>(t), mean);

  const regret::Comparator<Rational> comparator{{table.comparator_argmin}, table.comparator_min};
  table.oracle = score({1, 2, 3}, comparator);
  table.stale = score({1, Rational(3, 2), 2}, comparator);
  return table;
}

std::string to_string(const Rational& r) {
  std::ostringstream out;
  out << r.numerator();
  if (r.denominator() != 1) out << '/' << r.denominator();
  return out.str();
}

std::string format_toy_table(const ToyTable& t) {
  std::ostringstream out;
  auto row = [&out](const char* name, const Rational& oracle, const Rational& stale) {
    out << name;
    for (std::size_t pad = std::string(name).size(); pad < 28; ++pad) out << ' ';
    std::string o = to_string(oracle), s = to_string(stale);
    out << o << std::string(o.size() < 10 ? 10 - o.size() : 1, ' ') << s
        << std::string(s.size() < 10 ? 10 - s.size() : 1, ' ') << prefers(oracle, stale) << '\n';
  };
  out << "Drifting quadratics f_t(x) = (x - t)^2, T = 3, w = 3, alpha = 1\n";
  out << "oracle policy x = (1, 2, 3); stale policy x = (1, 3/2, 2)\n\n";
  out << "regret                      oracle    stale     decision\n";
  row("cumulative loss", t.oracle.cumulative_loss, t.stale.cumulative_loss);
  row("standard regret", t.oracle.standard_regret, t.stale.standard_regret);
  row("static local regret (SLR)", t.oracle.static_local_regret, t.stale.static_local_regret);
  row("dynamic local regret (DLR)", t.oracle.dynamic_local_regret, t.stale.dynamic_local_regret);
  out << "\ncomparator: argmin " << to_string(t.comparator_argmin) << ", min "
      << to_string(t.comparator_min) << '\n';
  out << "note: the commonly quoted stale-policy values SLR = " << to_string(kPublishedStaleStaticLocalRegret)
      << " and standard regret = " << to_string(kPublishedStaleStandardRegret)
      << " do not follow from the definitions;\n"
         "      direct evaluation gives SLR = "
      << to_string(t.stale.static_local_regret) << " and standard regret = " << to_string(t.stale.standard_regret)
      << ". The decisions are unchanged.\n";
  return out.str();
}

}  // namespace driftsgd::toy
