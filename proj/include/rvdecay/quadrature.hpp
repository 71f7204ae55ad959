#pragma once

// Adaptive panel quadrature built on a Gauss-Legendre base rule whose nodes
// and weights are computed at startup (Newton iteration on the Legendre
// polynomial, cosine initial guesses) rather than pasted in as literals.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace rvdecay {

class GaussLegendre {
 public:
  explicit GaussLegendre(int points = 10);

  // The shared default 10-point rule (exact through degree 19).
  static const GaussLegendre& standard();

  // Single-panel estimate of the integral of f over [a, b].
  template <class F>
  double panel(F&& f, double a, double b) const {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      sum += weights_[i] * f(mid + half * nodes_[i]);
    }
    return sum * half;
  }

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;  // accumulated |whole - (left + right)|
  long panels = 0;              // accepted panels
  bool converged = true;        // false if the depth limit cut refinement short

  operator double() const { return value; }
};

namespace detail {

template <class F>
void adapt(const GaussLegendre& gl, F& f, double a, double b, double whole,
           double rel_tol, double abs_tol, int depth, QuadratureResult& out) {
  const double mid = 0.5 * (a + b);
  const double left = gl.panel(f, a, mid);
  const double right = gl.panel(f, mid, b);
  const double refined = left + right;
  const double diff = std::fabs(refined - whole);
  const double tol = std::max(rel_tol * std::fabs(refined), abs_tol);
  if (diff <= tol) {
    out.value += refined;
    out.error_estimate += diff;
    out.panels += 2;
    return;
  }
  if (depth <= 0) {
    out.value += refined;
    out.error_estimate += diff;
    out.panels += 2;
    out.converged = false;
    return;
  }
  adapt(gl, f, a, mid, left, rel_tol, abs_tol * 0.5, depth - 1, out);
  adapt(gl, f, mid, b, right, rel_tol, abs_tol * 0.5, depth - 1, out);
}

}  // namespace detail

// Integrates f over [a, b] by bisecting panels until the refined estimate
// agrees with the coarse one to rel_tol (with abs_tol as an absolute floor,
// useful when the true value may be zero).  f may throw; the exception
// propagates.  A reversed interval integrates with the opposite sign.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b,
                                    double rel_tol = 1e-12, double abs_tol = 0.0,
                                    int max_depth = 48) {
  QuadratureResult out;
  if (a == b) return out;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  const GaussLegendre& gl = GaussLegendre::standard();
  const double whole = gl.panel(f, a, b);
  detail::adapt(gl, f, a, b, whole, rel_tol, abs_tol, max_depth, out);
  out.value *= sign;
  return out;
}

}  // namespace rvdecay
