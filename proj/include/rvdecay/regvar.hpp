#pragma once

// Numerical estimation of power-law behaviour at an endpoint: given h > 0
// sampled along a geometric grid approaching 0 or infinity, estimate the
// exponent b such that h(s) ~ s^b L(s) with L flat on the log scale, or
// recognise that h outruns every power (rapid growth or decay of the
// log-log slope), or declare the data inconclusive.
//
// Method: log-log slopes over consecutive grid pairs; per-decade averages
// accelerated by Aitken extrapolation give the primary estimate, a global
// least-squares slope the fallback and a cross-check.  Faulting, vanishing,
// or non-finite samples truncate the grid to its valid prefix (recorded in
// the estimate), which is what makes steeply decaying inputs — values that
// underflow long before the far end of the grid — still classifiable.

#include <string>
#include <vector>

#include "rvdecay/expr.hpp"
#include "rvdecay/flowmap.hpp"

namespace rvdecay {

enum class VariationKind {
  kRegular,       // finite log-log slope: h(s) ~ s^index
  kRapidPlus,     // slope runs to +infinity
  kRapidMinus,    // slope runs to -infinity
  kInconclusive,  // data does not settle on any of the above
};

struct VariationEstimate {
  VariationKind kind = VariationKind::kInconclusive;
  double index = 0.0;        // meaningful when kind == kRegular
  double uncertainty = 0.0;  // ditto; always > 0
  int samples = 0;           // valid grid points actually used
  bool truncated = false;    // the grid was cut short by faults or underflow
  std::string note;          // human-readable diagnostics

  bool regular() const { return kind == VariationKind::kRegular; }
  bool rapid() const {
    return kind == VariationKind::kRapidPlus || kind == VariationKind::kRapidMinus;
  }
};

struct VariationGrid {
  double start = 0.0;  // coarse end, sampled first
  double stop = 0.0;   // endpoint side
  int points_per_decade = 8;
  double rapid_cutoff = 50.0;  // |slope| beyond which growth counts as rapid
};

// Exponent of h near 0 (grid descends from start to stop, both in (0, 1)).
VariationEstimate variation_index_at_zero(const FunctionSpec& h,
                                          const VariationGrid& grid = {1e-2, 1e-8, 8, 50.0});

// Exponent of h near infinity (grid ascends from start to stop).
VariationEstimate variation_index_at_infinity(const FunctionSpec& h,
                                              const VariationGrid& grid = {1e2, 1e8, 8, 50.0});

// Pointwise h(lambda * t) / h(t) over the given sample times; the flatness
// (or power scaling) of these ratios is what the index estimates formalize.
// Throws std::invalid_argument if h is not positive at a required point.
std::vector<double> scaling_ratio_curve(const FunctionSpec& h, double lambda,
                                        const std::vector<double>& ts);

// How far F is from its power-law surrogate x / ((beta - 1) f(x)); tends to
// 0 as x tends to 0 when f has exponent beta > 1 at 0.
double karamata_residual(const FlowMap& fm, double x, double beta);

}  // namespace rvdecay
