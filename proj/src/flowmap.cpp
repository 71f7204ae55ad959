#include "rvdecay/flowmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "rvdecay/quadrature.hpp"

namespace rvdecay {

namespace {

// Rung count keeping 2^{-j/4} comfortably inside normal double range.
constexpr std::size_t kMaxRungs = 3985;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FlowMap::FlowMap(FunctionSpec f, double rel_tol)
    : f_(std::move(f)), rel_tol_(rel_tol) {
  down_x_ = {1.0};
  down_F_ = {0.0};
  up_x_ = {1.0};
  up_F_ = {0.0};
}

double FlowMap::reciprocal_panel(double a, double b) const {
  auto integrand = [this](double u) {
    EvalResult r = f_.eval(u);
    if (!r.ok()) {
      throw FlowMapError("f failed while integrating the comparison clock: " +
                         f_.ast.describe_fault(r) + " at u = " + fmt(u));
    }
    if (r.value <= 0.0) {
      throw FlowMapError("f must stay positive on the clock's range, but f(" +
                         fmt(u) + ") = " + fmt(r.value) +
                         (r.value == 0.0 ? " (possibly an underflow)" : ""));
    }
    return 1.0 / r.value;
  };
  QuadratureResult q = integrate_adaptive(integrand, a, b, rel_tol_, 0.0, 40);
  if (!std::isfinite(q.value)) {
    throw FlowMapError("the comparison clock integral over [" + fmt(a) + ", " +
                       fmt(b) + "] is not finite");
  }
  return q.value;
}

void FlowMap::extend_down(std::size_t rungs) const {
  while (down_x_.size() <= rungs) {
    const std::size_t j = down_x_.size();
    const double x = std::pow(2.0, -static_cast<double>(j) / 4.0);
    const double inc = reciprocal_panel(x, down_x_.back());
    down_F_.push_back(down_F_.back() + inc);
    down_x_.push_back(x);
    if (!std::isfinite(down_F_.back())) {
      throw FlowMapError("the comparison clock overflows near x = " + fmt(x));
    }
  }
}

void FlowMap::extend_up(std::size_t rungs) const {
  while (up_x_.size() <= rungs) {
    const std::size_t j = up_x_.size();
    const double x = std::pow(2.0, static_cast<double>(j) / 4.0);
    const double inc = reciprocal_panel(up_x_.back(), x);
    up_F_.push_back(up_F_.back() - inc);
    up_x_.push_back(x);
  }
}

double FlowMap::F(double x) const {
  if (!(x > 0.0)) {
    throw FlowMapError("the comparison clock is defined for x > 0, got x = " + fmt(x));
  }
  if (x == 1.0) return 0.0;
  if (x < 1.0) {
    double idx = std::floor(-4.0 * std::log2(x));
    std::size_t j = idx < 0.0 ? 0 : static_cast<std::size_t>(idx);
    if (j > kMaxRungs) j = kMaxRungs;
    extend_down(j);
    while (j > 0 && down_x_[j] < x) --j;
    return down_F_[j] + reciprocal_panel(x, down_x_[j]);
  }
  double idx = std::floor(4.0 * std::log2(x));
  std::size_t j = idx < 0.0 ? 0 : static_cast<std::size_t>(idx);
  if (j > kMaxRungs) j = kMaxRungs;
  extend_up(j);
  while (j > 0 && up_x_[j] > x) --j;
  return up_F_[j] - reciprocal_panel(up_x_[j], x);
}

std::size_t FlowMap::bracket_down(double y) const {
  while (down_F_.back() < y) {
    if (down_x_.size() - 1 >= kMaxRungs) {
      throw FlowMapError(
          "F^{-1}(" + fmt(y) + ") does not exist: the comparison clock reaches only " +
          fmt(down_F_.back()) + " by x = " + fmt(down_x_.back()) +
          " and is levelling off, so it stays bounded near 0 (unperturbed "
          "solutions hit zero in finite time; 1/f is integrable at 0)");
    }
    extend_down(down_x_.size());
  }
  // First rung at or past y; the ladder may extend far beyond it already.
  return static_cast<std::size_t>(
      std::lower_bound(down_F_.begin(), down_F_.end(), y) - down_F_.begin());
}

std::size_t FlowMap::bracket_up(double y) const {
  while (up_F_.back() > y) {
    if (up_x_.size() - 1 >= kMaxRungs) {
      throw FlowMapError(
          "F^{-1}(" + fmt(y) + ") does not exist: the comparison clock only falls to " +
          fmt(up_F_.back()) + " by x = " + fmt(up_x_.back()) +
          ", so no admissible starting height maps there");
    }
    extend_up(up_x_.size());
  }
  return static_cast<std::size_t>(
      std::lower_bound(up_F_.begin(), up_F_.end(), y, std::greater<double>()) -
      up_F_.begin());
}

double FlowMap::solve_in(double lo, double hi, double y) const {
  // F is strictly decreasing: F(lo) >= y >= F(hi).  Damped Newton with the
  // exact derivative F' = -1/f, falling back to bisection when a step leaves
  // the bracket.
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 120; ++iter) {
    const double g = F(x) - y;
    if (g == 0.0) return x;
    if (g > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next;
    const EvalResult fr = f_.eval(x);
    if (fr.ok() && fr.value > 0.0) {
      next = x + g * fr.value;  // Newton step for F(x) = y
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    } else {
      next = 0.5 * (lo + hi);
    }
    if (std::fabs(next - x) <= 1e-13 * std::fabs(x)) return next;
    x = next;
    if (hi - lo <= 1e-13 * hi) break;
  }
  return x;
}

double FlowMap::invert_F(double y) const {
  if (y == 0.0) return 1.0;
  if (y > 0.0) {
    const std::size_t j = bracket_down(y);
    if (down_F_[j] == y) return down_x_[j];
    return solve_in(down_x_[j], down_x_[j - 1], y);
  }
  const std::size_t j = bracket_up(y);
  if (up_F_[j] == y) return up_x_[j];
  return solve_in(up_x_[j - 1], up_x_[j], y);
}

double FlowMap::comparison_scale(double t) const { return f_(invert_F(t)); }

double FlowMap::unperturbed_solution(double xi, double t) const {
  if (!(xi > 0.0)) {
    throw FlowMapError("unperturbed solutions require a positive start, got xi = " +
                       fmt(xi));
  }
  if (t == 0.0) return xi;
  return invert_F(t + F(xi));
}

}  // namespace rvdecay
