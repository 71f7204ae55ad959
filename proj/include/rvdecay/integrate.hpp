#pragma once

// Long-horizon integration of x' = -f(x) + g(t), x(0) = xi, with an
// embedded 5(4) Runge-Kutta pair (Dormand-Prince coefficients, first-same-
// as-last).  Steps are clipped so the solution lands exactly on a geometric
// checkpoint grid — t = 0, then first_checkpoint up to the horizon at
// checkpoints_per_decade points per decade — and only those checkpoints are
// recorded; there is no dense output in between.
//
// Solutions started on the positive side stay positive; a step that crosses
// zero is rejected and retried smaller, and if the step size collapses the
// solution is clamped to a tiny positive value and the trajectory notes it.

#include <string>
#include <vector>

#include "rvdecay/flowmap.hpp"
#include "rvdecay/problem.hpp"

namespace rvdecay {

enum class SolutionVerdict {
  kConvergesToZero,  // final decade falls and ends far below |xi|
  kEscapes,          // final decade rises and ends far above |xi|
  kUndetermined,     // neither certified within the horizon
};

std::string verdict_name(SolutionVerdict v);

struct IntegrateOptions {
  double horizon = 1e6;
  double rtol = 1e-9;
  double atol = 1e-12;
  double first_checkpoint = 1e-2;
  int checkpoints_per_decade = 32;
  // 0 means: use the RVDECAY_MAX_STEPS environment variable if set,
  // otherwise 5e7.  Counts accepted plus rejected steps.
  long long max_steps = 0;
  bool enforce_sign = true;  // keep sign(x) == sign(xi)
};

struct Trajectory {
  std::vector<double> t;  // 0, then the checkpoint grid, ending at final_t
  std::vector<double> x;

  SolutionVerdict verdict = SolutionVerdict::kUndetermined;
  bool reached_horizon = false;
  bool budget_exhausted = false;
  bool clamped = false;      // the positivity clamp engaged at least once
  std::string stop_reason;   // empty when the horizon was reached normally

  long long steps_accepted = 0;
  long long steps_rejected = 0;
  double final_t = 0.0;
  double final_x = 0.0;
};

// Integrates the perturbed problem.  Faults in f or g during stepping first
// shrink the step, then stop the trajectory with a reason.
Trajectory integrate_problem(const ProblemSpec& p,
                             const IntegrateOptions& opts = {});

// The unperturbed comparison flow y(t) = F^{-1}(t + F(xi)) evaluated
// exactly on the same checkpoint grid (no stepping involved).
Trajectory unperturbed_trajectory(const FlowMap& fm, double xi,
                                  const IntegrateOptions& opts = {});

// Applies the final-decade test to an existing trajectory.
SolutionVerdict detect_limit(const Trajectory& traj, double xi);

// The checkpoint grid an integration with these options will report:
// 0, first_checkpoint, ... up to and including the horizon.
std::vector<double> checkpoint_grid(const IntegrateOptions& opts);

}  // namespace rvdecay
