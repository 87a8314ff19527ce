#pragma once

#include <optional>

#include "driftsgd/losses.hpp"
#include "driftsgd/optim.hpp"
#include "driftsgd/regret.hpp"

namespace driftsgd::optim {

struct OracleRunConfig {
  Method method = Method::dts;
  std::size_t window = 1;
  double alpha = 1.0;
  double eta = 0.1;
  double momentum_decay = 0.9;
  long steps = 0;
  bool schedule = false;  // eta / sqrt(t) when set
};

struct OracleRun {
  regret::RegretLedger ledger;  // x_t, f_t(x_t) and the exact grad f_t(x_t)
  std::vector<StepReport> reports;
  std::size_t oracle_calls = 0;
  std::optional<long> first_nan_step;
  Vector final_x;
};

/// Runs one online method against f_1..f_steps, stepping on the oracle's noisy
/// gradients. A non-finite loss, gradient or iterate ends the run early and is
/// reported as first_nan_step instead of an exception.
OracleRun run_on_oracle(losses::LossOracle& oracle, const OracleRunConfig& config, Vector x0);

}  // namespace driftsgd::optim
