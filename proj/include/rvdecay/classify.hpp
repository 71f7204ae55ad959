#pragma once

// Regime classification for x' = -f(x) + g(t).
//
// The driving quantity is the ratio r(t) = g(t) / f(F^{-1}(t)): the
// perturbation measured against the scale at which the unperturbed flow is
// still moving at comparison time t.  Its limit L as t -> infinity sorts the
// dynamics into three regimes:
//
//   L = 0         Preserved   the unperturbed clock survives, F(x)/t -> 1
//   L in (0,inf)  Critical    the clock slows by a constant factor
//                             Lambda* in (0,1): F(x)/t -> Lambda*
//   L = infinity  Dominated   the perturbation sets the pace, F(x)/t -> 0
//                             and (when g eventually decays) f(x)/g(t) -> 1
//
// In the Critical regime Lambda* solves
//   (1 - Lambda) * Lambda^(-beta/(beta-1)) = L
// when f has a finite decay exponent beta > 1 at the origin, and
//   Lambda* = 1/(1 + L)
// when f flattens faster than every power (the rapid branch, beta = inf).

#include <optional>
#include <string>
#include <vector>

#include "rvdecay/flowmap.hpp"
#include "rvdecay/problem.hpp"

namespace rvdecay {

// ---------------------------------------------------------------------------
// The limit L of r(t) = g(t) / f(F^{-1}(t)).

enum class LimitVerdict { kZero, kFinite, kInfinite, kUndetermined };

struct LimitEstimate {
  LimitVerdict verdict = LimitVerdict::kUndetermined;
  // For kFinite: value > 0 and uncertainty < value always hold (an estimate
  // that cannot meet them is reported kUndetermined instead).  For kZero the
  // value is 0.  For kInfinite / kUndetermined the value is not meaningful.
  double value = 0.0;
  double uncertainty = 0.0;
  std::vector<double> times;   // sample times actually used
  std::vector<double> ratios;  // r at those times
  bool truncated = false;      // sampling stopped early (fault or overflow)
  std::string note;
};

struct LimitGrid {
  double t0 = 10.0;            // first sample time
  int doublings = 20;          // samples at t0 * 2^k, k = 0..doublings
  double divergence_cap = 1e6; // rising past this reads as L = infinity
  double vanish_floor = 1e-6;  // falling below this reads as L = 0
};

LimitEstimate estimate_L(const FunctionSpec& g, const FlowMap& fm,
                         const LimitGrid& grid = {});

// ---------------------------------------------------------------------------
// The rate constant.

// Solves (1 - Lambda) * Lambda^(-beta/(beta-1)) = L for Lambda in (0, 1).
// With rapid = true the branch Lambda = 1/(1 + L) applies and beta is
// ignored.  Throws std::invalid_argument unless L is positive and finite
// and (non-rapid) beta > 1.
double lambda_star(double L, double beta, bool rapid = false);

// ---------------------------------------------------------------------------
// Integrability survey of g over [0, infinity).

enum class GIntegrability { kYes, kNo, kUnknown };

struct GIntegralEstimate {
  GIntegrability verdict = GIntegrability::kUnknown;
  double value = 0.0;  // integral estimate incl. extrapolated tail (kYes only)
  std::string note;
};

GIntegralEstimate integrable_g(const FunctionSpec& g, double horizon = 1e12);

// ---------------------------------------------------------------------------
// The full report.

enum class Regime { kPreserved, kCritical, kDominated, kRejected };

std::string regime_name(Regime r);

struct RegimeReport {
  Regime regime = Regime::kRejected;
  bool reflected = false;     // problem was mirrored from the negative side
  bool inconclusive = false;  // numerics could not certify an answer

  // Decay exponent of f at 0 (beta) and of g at infinity (theta, positive
  // means decay).  *_known marks whether a value was established at all;
  // rapid branches carry no finite exponent.
  bool beta_known = false;
  bool beta_rapid = false;
  double beta = 0.0;
  double beta_uncertainty = 0.0;

  bool theta_known = false;
  bool theta_rapid = false;  // g decays faster than every power
  double theta = 0.0;
  double theta_uncertainty = 0.0;
  bool theta_positive = false;  // certified decay (or asserted via flags)

  bool L_estimated = false;  // estimate_L actually ran
  LimitEstimate L;

  bool has_lambda = false;
  double lambda = 0.0;  // 1 in Preserved, Lambda* in Critical

  std::string predicted_rate;  // human-readable limit statement, empty if none

  // Limit of x(t) / y(t) against the unperturbed solution started at the
  // same xi: a number, infinite (Dominated), or absent.
  bool has_x_over_y = false;
  bool x_over_y_infinite = false;
  double x_over_y = 0.0;

  // Power-law index of the solution drop x(t) ~ t^index, when one exists.
  bool has_solution_index = false;
  double solution_index = 0.0;

  GIntegralEstimate g_integral;

  std::vector<std::string> notes;
  std::string reject_reason;  // set when regime == kRejected

  // 0 classified, 2 out of scope (Rejected), 3 inconclusive numerics.
  int exit_code() const;

  // Flat JSON object; stable keys beta, theta, L_verdict, L_value,
  // lambda_star, regime, predicted_rate, x_over_y_limit, g_integrable.
  std::string to_json(int indent = 2) const;
};

struct ClassifyOptions {
  LimitGrid limit_grid;
  double g_integral_horizon = 1e12;
  double flow_rel_tol = 1e-12;  // quadrature tolerance of the comparison clock
};

// Validates (reflecting if needed), estimates exponents and L, and assembles
// the regime report.  Never throws on in-scope failures: everything that
// cannot be classified comes back as kRejected with a reason.
RegimeReport classify(const ProblemSpec& p, const ClassifyOptions& opts = {});

}  // namespace rvdecay
