#include "driftsgd/online_run.hpp"

#include <cmath>

#include "driftsgd/errors.hpp"

namespace driftsgd::optim {

OracleRun run_on_oracle(losses::LossOracle& oracle, const OracleRunConfig& config, Vector x0) {
  if (config.steps < 0 || config.steps > oracle.horizon())
    throw ConfigError("run length exceeds the oracle horizon");
  if (x0.size() != oracle.dimension()) throw ConfigError("initial point dimension mismatch");

  OptimizerState state;
  switch (config.method) {
    case Method::sgd: state = make_sgd_state(std::move(x0)); break;
    case Method::momentum: state = make_momentum_state(std::move(x0)); break;
    case Method::sts: state = make_sts_state(std::move(x0), config.window); break;
    case Method::dts: state = make_dts_state(std::move(x0), config.window, config.alpha); break;
    case Method::offline: throw ConfigError("offline retraining has no per-step oracle run");
  }

  OracleRun run;
  for (long t = 1; t <= config.steps; ++t) {
    const double loss = oracle.eval(t, state.x);
    Vector exact = oracle.grad(t, state.x);
    if (!all_finite(state.x) || !std::isfinite(loss) || !all_finite(exact)) {
      run.first_nan_step = t;
      break;
    }
    run.ledger.append(state.x, loss, exact);
    const double eta = config.schedule ? lr_schedule(config.eta, t) : config.eta;
    try {
      StepReport report;
      if (config.method == Method::sts) {
        report = sts_sgd_step(state, oracle, eta);
      } else {
        const Vector g = oracle.noisy_grad(t, state.x);
        if (config.method == Method::sgd) report = sgd_step(state, g, eta);
        else if (config.method == Method::momentum) report = momentum_step(state, g, eta, config.momentum_decay);
        else report = dts_sgd_step(state, g, eta);
      }
      run.oracle_calls += report.oracle_calls;
      run.reports.push_back(report);
    } catch (const NumericError&) {
      run.first_nan_step = t;
      break;
    }
    if (!all_finite(state.x)) {
      run.first_nan_step = t + 1;
      break;
    }
  }
  run.final_x = std::move(state.x);
  return run;
}

}  // namespace driftsgd::optim
