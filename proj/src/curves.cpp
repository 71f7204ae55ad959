#include "rvdecay/curves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rvdecay/accel.hpp"

namespace rvdecay {
namespace {

// Fill in the limit/uncertainty fields from the recorded tail.  The Aitken
// estimate is clamped into the band spanned by the last three values padded
// by their spread, so acceleration can sharpen but never contradict the data.
void finish_curve(RateCurve& c) {
  const std::size_t n = c.value.size();
  if (n == 0) return;
  if (n < 3) {
    c.has_limit = true;
    c.limit = c.value.back();
    c.uncertainty =
        n == 2 ? std::fabs(c.value[1] - c.value[0]) : std::fabs(c.value[0]);
    return;
  }
  const double a = c.value[n - 3];
  const double b = c.value[n - 2];
  const double d = c.value[n - 1];
  const double lo = std::min({a, b, d});
  const double hi = std::max({a, b, d});
  const double spread = hi - lo;
  const AccelResult ak = aitken_limit(c.value);
  double est = ak.usable && std::isfinite(ak.value) ? ak.value : d;
  est = std::clamp(est, lo - spread, hi + spread);
  c.has_limit = true;
  c.limit = est;
  c.uncertainty = spread;
}

void note_skips(RateCurve& c, std::size_t skipped, const char* why) {
  if (skipped == 0) return;
  if (!c.note.empty()) c.note += "; ";
  c.note += std::to_string(skipped) + " point(s) skipped: " + why;
}

}  // namespace

double RateCurve::at_time(double when) const {
  if (t.empty()) throw std::out_of_range("rate curve has no recorded points");
  const auto it = std::lower_bound(t.begin(), t.end(), when);
  std::size_t i;
  if (it == t.begin()) {
    i = 0;
  } else if (it == t.end()) {
    i = t.size() - 1;
  } else {
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    i = (when - t[hi - 1] <= t[hi] - when) ? hi - 1 : hi;
  }
  return value[i];
}

double RateCurve::final_value() const {
  if (value.empty()) throw std::out_of_range("rate curve has no recorded points");
  return value.back();
}

RateCurve clock_ratio_curve(const Trajectory& traj, const FlowMap& fm) {
  RateCurve c;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double ti = traj.t[i];
    const double xi = traj.x[i];
    if (!(ti > 0.0) || !std::isfinite(xi) || !(xi > 0.0)) {
      if (ti > 0.0) ++skipped;
      continue;
    }
    double r;
    try {
      r = fm.F(xi) / ti;
    } catch (const FlowMapError&) {
      ++skipped;
      continue;
    }
    if (!std::isfinite(r)) {
      ++skipped;
      continue;
    }
    c.t.push_back(ti);
    c.value.push_back(r);
  }
  note_skips(c, skipped, "state outside the clock's domain");
  finish_curve(c);
  return c;
}

RateCurve tracking_ratio_curve(const Trajectory& traj, const ProblemSpec& p) {
  RateCurve c;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double ti = traj.t[i];
    const double xi = traj.x[i];
    const EvalResult fv = p.f.eval(xi);
    const EvalResult gv = p.g.eval(ti);
    if (!fv.ok() || !gv.ok() || !(gv.value > 0.0)) {
      ++skipped;
      continue;
    }
    const double r = fv.value / gv.value;
    if (!std::isfinite(r)) {
      ++skipped;
      continue;
    }
    c.t.push_back(ti);
    c.value.push_back(r);
  }
  note_skips(c, skipped, "f or g not evaluable, or g not positive");
  finish_curve(c);
  return c;
}

RateCurve comparison_ratio_curve(const Trajectory& traj, const FlowMap& fm,
                                 double xi) {
  RateCurve c;
  std::size_t skipped = 0;
  double f_xi;
  try {
    f_xi = fm.F(xi);
  } catch (const FlowMapError&) {
    c.note = "starting point outside the clock's domain";
    return c;
  }
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double ti = traj.t[i];
    const double x = traj.x[i];
    if (!std::isfinite(x)) {
      ++skipped;
      continue;
    }
    double y;
    try {
      y = fm.invert_F(ti + f_xi);
    } catch (const FlowMapError&) {
      ++skipped;
      continue;
    }
    if (!(y > 0.0) || !std::isfinite(x / y)) {
      ++skipped;
      continue;
    }
    c.t.push_back(ti);
    c.value.push_back(x / y);
  }
  note_skips(c, skipped, "unperturbed flow not resolvable");
  finish_curve(c);
  return c;
}

}  // namespace rvdecay
