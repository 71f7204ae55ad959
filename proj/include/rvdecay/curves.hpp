#pragma once

// Empirical rate curves measured along an integrated trajectory: the three
// diagnostic ratios whose limits the classifier predicts.
//
//   clock       F(x(t)) / t        (1 preserved, Lambda* critical, 0 dominated)
//   tracking    f(x(t)) / g(t)     (-> 1 in the dominated regime when g decays)
//   comparison  x(t) / y(t)        against y, the unperturbed flow from xi
//
// Each curve keeps the points it could evaluate, a tail-extrapolated limit,
// and an uncertainty read off the spread of the final points.  The
// extrapolation never leaves the convex hull of the last three values padded
// by that spread — acceleration is not allowed to invent a limit the data
// does not bracket.

#include <string>
#include <vector>

#include "rvdecay/flowmap.hpp"
#include "rvdecay/integrate.hpp"
#include "rvdecay/problem.hpp"

namespace rvdecay {

struct RateCurve {
  std::vector<double> t;
  std::vector<double> value;
  bool has_limit = false;
  double limit = 0.0;
  double uncertainty = 0.0;  // spread of the last three recorded values
  std::string note;

  // Value at the recorded time closest to `when`; throws std::out_of_range
  // on an empty curve.
  double at_time(double when) const;
  double final_value() const;
};

// F(x)/t over the trajectory's positive-time checkpoints.
RateCurve clock_ratio_curve(const Trajectory& traj, const FlowMap& fm);

// f(x)/g(t) over the checkpoints where g is positive.
RateCurve tracking_ratio_curve(const Trajectory& traj, const ProblemSpec& p);

// x(t)/y(t) with y the unperturbed flow started at xi.
RateCurve comparison_ratio_curve(const Trajectory& traj, const FlowMap& fm,
                                 double xi);

}  // namespace rvdecay
