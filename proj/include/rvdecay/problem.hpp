#pragma once

// The problem container: x'(t) = -f(x(t)) + g(t), x(0) = xi, plus the
// assumption flags a user can assert but samples cannot prove.
//
// The canonical orientation is xi > 0 with g > 0.  A fully negative problem
// (xi < 0, g < 0) is equivalent to the canonical one through the mirror
// x -> -x, which maps f to -f(-x) and flips g and xi; reflect_problem
// performs that rewrite structurally, simplifying double negations away so
// that odd f (signed_pow, sgn, abs compositions) comes back syntactically
// unchanged.

#include <optional>
#include <string>
#include <vector>

#include "rvdecay/expr.hpp"

namespace rvdecay {

struct ProblemFlags {
  bool g_asymptotically_decreasing = false;  // user-asserted tail shape of g
  bool monotone_envelope_assumed = false;    // user-asserted envelope for f
};

struct ProblemSpec {
  FunctionSpec f;  // variable "x"; restoring force, f(0) = 0, f > 0 for x > 0
  FunctionSpec g;  // variable "t"; perturbation
  double xi = 1.0;
  std::optional<double> beta_hint;   // decay exponent of f at 0, if known
  std::optional<double> theta_hint;  // decay exponent of g at infinity, if known
  ProblemFlags flags;
};

struct ValidationResult {
  bool ok = false;           // usable in canonical orientation as given
  bool reflectable = false;  // usable after reflect_problem
  bool g_identically_zero = false;
  std::vector<std::string> issues;

  std::string summary() const;  // issues joined, or "ok"
};

// Samples signs of f, g and the behaviour of f at 0; fills issues for
// anything that puts the problem outside the supported scope.
ValidationResult validate_problem(const ProblemSpec& p);

// The mirror transform for a fully negative problem (xi < 0, g < 0 sampled).
// Throws std::invalid_argument when the problem is not of that shape.
ProblemSpec reflect_problem(const ProblemSpec& p);

// Structural -h(-x) rewrite used by reflect_problem; exposed for tests.
Expr negate_reflect(const Expr& e);
// Structural -h(t) rewrite (variable untouched).
Expr negate(const Expr& e);

}  // namespace rvdecay
