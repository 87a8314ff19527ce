#pragma once

// The three-step drifting quadratic example: f_t(x) = (x - t)^2 for t = 1..3,
// an oracle policy x = (1, 2, 3) and a stale policy x = (1, 1.5, 2), scored in
// exact rational arithmetic with w = 3 and alpha = 1.

#include <string>

#include <boost/rational.hpp>

namespace driftsgd::toy {

using Rational = boost::rational<long long>;

struct PolicyScores {
  Rational cumulative_loss;
  Rational standard_regret;
  Rational static_local_regret;
  Rational dynamic_local_regret;
};

struct ToyTable {
  PolicyScores oracle;
  PolicyScores stale;
  Rational comparator_argmin;
  Rational comparator_min;
};

/// Values as published for the stale policy where they differ from direct
/// evaluation of the regret definitions.
inline const Rational kPublishedStaleStaticLocalRegret{4, 9};
inline const Rational kPublishedStaleStandardRegret{-3, 8};

ToyTable toy_table();

std::string to_string(const Rational& r);

/// Human-readable table with a decision column and a note on the two
/// published stale-policy entries that direct evaluation does not reproduce.
std::string format_toy_table(const ToyTable& table);

}  // namespace driftsgd::toy
