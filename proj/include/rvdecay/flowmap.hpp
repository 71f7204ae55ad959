#pragma once

// The comparison clock of the unperturbed flow x' = -f(x):
//
//   F(x) = integral of 1/f(u) du from x to 1
//
// F is strictly decreasing in x wherever f > 0, with F(1) = 0, F > 0 on
// (0, 1) and F < 0 above 1.  The unperturbed trajectory started at xi is
// then x(t) = F^{-1}(t + F(xi)), and f(F^{-1}(t)) is the natural scale a
// perturbation is compared against.
//
// F is evaluated by caching its values on geometric ladders x_j = 2^{±j/4}
// and integrating only the partial rung adaptively; the inverse is a
// bracketed, damped Newton solve using F' = -1/f.  All failure modes (f not
// positive, f faulting, F staying bounded so the requested inverse does not
// exist) surface as FlowMapError with a message naming the location.

#include <stdexcept>
#include <string>
#include <vector>

#include "rvdecay/expr.hpp"

namespace rvdecay {

class FlowMapError : public std::runtime_error {
 public:
  explicit FlowMapError(const std::string& what) : std::runtime_error(what) {}
};

class FlowMap {
 public:
  explicit FlowMap(FunctionSpec f, double rel_tol = 1e-12);

  // The clock itself; x must be positive.
  double F(double x) const;

  // The unique x with F(x) = y.  Throws FlowMapError if no such x exists
  // (F bounded at 0 with y above the bound, or f not positive somewhere
  // the search must cross).
  double invert_F(double y) const;

  // f(F^{-1}(t)): the decay scale of unperturbed solutions at clock time t.
  double comparison_scale(double t) const;

  // F^{-1}(t + F(xi)); exactly xi at t = 0.
  double unperturbed_solution(double xi, double t) const;

  const FunctionSpec& f() const { return f_; }

 private:
  double reciprocal_panel(double a, double b) const;  // integral of 1/f over [a,b]
  void extend_down(std::size_t rungs) const;
  void extend_up(std::size_t rungs) const;
  // Largest cached rung index whose clock value is still below y (searching
  // down) or above y (searching up); extends the ladder on demand.
  std::size_t bracket_down(double y) const;
  std::size_t bracket_up(double y) const;
  double solve_in(double lo, double hi, double y) const;

  FunctionSpec f_;
  double rel_tol_;
  // down_x_[j] = 2^{-j/4} with cumulative clock values down_F_[j] >= 0;
  // up_x_[j] = 2^{+j/4} with up_F_[j] <= 0.  Index 0 is x = 1 on both.
  mutable std::vector<double> down_x_, down_F_;
  mutable std::vector<double> up_x_, up_F_;
};

}  // namespace rvdecay
