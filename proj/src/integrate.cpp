#include "rvdecay/integrate.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace rvdecay {

namespace {

constexpr long long kDefaultMaxSteps = 50000000;  // 5e7

long long resolve_max_steps(long long requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RVDECAY_MAX_STEPS")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return kDefaultMaxSteps;
}

// Dormand-Prince 5(4) tableau.
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0,
                 kC5 = 8.0 / 9.0;
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
// Error weights: 5th-order weights minus the embedded 4th-order weights.
constexpr double kE1 = kB1 - 5179.0 / 57600.0;
constexpr double kE3 = kB3 - 7571.0 / 16695.0;
constexpr double kE4 = kB4 - 393.0 / 640.0;
constexpr double kE5 = kB5 + 92097.0 / 339200.0;
constexpr double kE6 = kB6 - 187.0 / 2100.0;
constexpr double kE7 = -1.0 / 40.0;

struct RhsValue {
  double value = 0.0;
  bool ok = false;
};

}  // namespace

std::string verdict_name(SolutionVerdict v) {
  switch (v) {
    case SolutionVerdict::kConvergesToZero: return "converges-to-zero";
    case SolutionVerdict::kEscapes: return "escapes";
    case SolutionVerdict::kUndetermined: return "undetermined";
  }
  return "undetermined";
}

std::vector<double> checkpoint_grid(const IntegrateOptions& opts) {
  std::vector<double> grid;
  grid.push_back(0.0);
  if (!(opts.horizon > 0.0)) return grid;
  const double l0 = std::log10(opts.first_checkpoint);
  const int ppd = opts.checkpoints_per_decade;
  for (int j = 0;; ++j) {
    const double c = std::pow(10.0, l0 + static_cast<double>(j) / ppd);
    if (c >= opts.horizon * (1.0 - 1e-12)) break;
    grid.push_back(c);
  }
  grid.push_back(opts.horizon);
  return grid;
}

Trajectory integrate_problem(const ProblemSpec& p, const IntegrateOptions& opts) {
  Trajectory traj;
  const std::vector<double> grid = checkpoint_grid(opts);
  const long long max_steps = resolve_max_steps(opts.max_steps);
  const double sign = (p.xi < 0.0) ? -1.0 : 1.0;

  const auto rhs = [&p](double t, double x) {
    RhsValue out;
    const EvalResult fv = p.f.eval(x);
    if (!fv.ok()) return out;
    const EvalResult gv = p.g.eval(t);
    if (!gv.ok()) return out;
    out.value = -fv.value + gv.value;
    out.ok = std::isfinite(out.value);
    return out;
  };

  double t = 0.0;
  double x = p.xi;
  traj.t.push_back(t);
  traj.x.push_back(x);

  std::size_t next_cp = 1;  // grid[0] == 0 is already recorded
  double h = std::min(1e-3, opts.first_checkpoint / 10.0);
  RhsValue k1 = rhs(t, x);
  if (!k1.ok) {
    traj.stop_reason = "right-hand side not evaluable at the start";
    traj.final_t = t;
    traj.final_x = x;
    traj.verdict = detect_limit(traj, p.xi);
    return traj;
  }

  while (next_cp < grid.size()) {
    if (traj.steps_accepted + traj.steps_rejected >= max_steps) {
      traj.budget_exhausted = true;
      traj.stop_reason = "step budget exhausted";
      break;
    }
    const double target = grid[next_cp];
    bool hit_cp = false;
    if (t + h >= target) {
      h = target - t;
      hit_cp = true;
    }

    const double k1v = k1.value;
    bool stage_ok = true;
    double k2v = 0, k3v = 0, k4v = 0, k5v = 0, k6v = 0, k7v = 0, x5 = 0;
    do {
      const RhsValue k2 = rhs(t + kC2 * h, x + h * (kA21 * k1v));
      if (!k2.ok) { stage_ok = false; break; }
      k2v = k2.value;
      const RhsValue k3 = rhs(t + kC3 * h, x + h * (kA31 * k1v + kA32 * k2v));
      if (!k3.ok) { stage_ok = false; break; }
      k3v = k3.value;
      const RhsValue k4 =
          rhs(t + kC4 * h, x + h * (kA41 * k1v + kA42 * k2v + kA43 * k3v));
      if (!k4.ok) { stage_ok = false; break; }
      k4v = k4.value;
      const RhsValue k5 = rhs(
          t + kC5 * h,
          x + h * (kA51 * k1v + kA52 * k2v + kA53 * k3v + kA54 * k4v));
      if (!k5.ok) { stage_ok = false; break; }
      k5v = k5.value;
      const RhsValue k6 =
          rhs(t + h, x + h * (kA61 * k1v + kA62 * k2v + kA63 * k3v +
                              kA64 * k4v + kA65 * k5v));
      if (!k6.ok) { stage_ok = false; break; }
      k6v = k6.value;
      x5 = x + h * (kB1 * k1v + kB3 * k3v + kB4 * k4v + kB5 * k5v + kB6 * k6v);
      const RhsValue k7s = rhs(t + h, x5);
      if (!k7s.ok) { stage_ok = false; break; }
      k7v = k7s.value;
    } while (false);

    const double h_min = 1e-14 * std::max(1.0, std::fabs(t));
    if (!stage_ok || !std::isfinite(x5)) {
      ++traj.steps_rejected;
      if (h <= h_min) {
        if (std::fabs(x) <= 1e-12 * std::max(1.0, std::fabs(p.xi))) {
          // Pinned against zero with stages reaching past it: absorbed.
          x = sign * 1e-300;
          traj.clamped = true;
          traj.t.push_back(t);
          traj.x.push_back(x);
          traj.stop_reason =
              "solution absorbed at zero near t = " + std::to_string(t);
        } else {
          traj.stop_reason = "right-hand side not evaluable near t = " +
                             std::to_string(t);
        }
        break;
      }
      h *= 0.5;
      continue;
    }

    // Positivity (sign preservation) guard.
    bool clamped_now = false;
    if (opts.enforce_sign && sign * x5 <= 0.0) {
      ++traj.steps_rejected;
      if (h <= h_min) {
        // The solution is pinned against zero at the resolution limit.
        x5 = sign * 1e-300;
        traj.clamped = true;
        clamped_now = true;
      } else {
        h *= 0.5;
        continue;
      }
    }

    const double err_est = h * (kE1 * k1v + kE3 * k3v + kE4 * k4v +
                                kE5 * k5v + kE6 * k6v + kE7 * k7v);
    const double scale =
        opts.atol + opts.rtol * std::max(std::fabs(x), std::fabs(x5));
    const double err = std::fabs(err_est) / scale;

    if (err > 1.0 && h > h_min && !clamped_now) {
      ++traj.steps_rejected;
      const double shrink =
          std::max(0.2, 0.9 * std::pow(err, -0.2));
      h *= shrink;
      continue;
    }

    // Accept; the last stage doubles as the first stage of the next step.
    ++traj.steps_accepted;
    t = t + h;
    x = x5;
    k1.value = k7v;
    k1.ok = true;
    if (clamped_now) {
      // Re-read the slope at the clamped point; if the field still pushes
      // through zero the solution is absorbed there and stepping on at the
      // resolution limit would never advance.
      k1 = rhs(t, x);
      if (!k1.ok || sign * k1.value <= 0.0) {
        if (hit_cp) {
          traj.t.push_back(target);
          traj.x.push_back(x);
          ++next_cp;
        } else {
          traj.t.push_back(t);
          traj.x.push_back(x);
        }
        traj.stop_reason = "solution absorbed at zero near t = " +
                           std::to_string(t);
        break;
      }
    }

    if (hit_cp) {
      t = target;  // exact landing, no roundoff drift
      traj.t.push_back(t);
      traj.x.push_back(x);
      ++next_cp;
    }

    if (!std::isfinite(x) || std::fabs(x) > 1e280) {
      traj.stop_reason = "solution overflowed";
      break;
    }

    const double grow = (err > 0.0)
                            ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)))
                            : 5.0;
    h = std::max(h * grow, h_min);
  }

  traj.final_t = t;
  traj.final_x = x;
  traj.reached_horizon = (next_cp >= grid.size());
  if (!std::isfinite(x) || std::fabs(x) > 1e280) {
    traj.verdict = SolutionVerdict::kEscapes;
  } else {
    traj.verdict = detect_limit(traj, p.xi);
  }
  return traj;
}

Trajectory unperturbed_trajectory(const FlowMap& fm, double xi,
                                  const IntegrateOptions& opts) {
  Trajectory traj;
  const std::vector<double> grid = checkpoint_grid(opts);
  const double F0 = fm.F(xi);
  for (double c : grid) {
    traj.t.push_back(c);
    traj.x.push_back(fm.invert_F(c + F0));
  }
  traj.reached_horizon = true;
  traj.final_t = traj.t.back();
  traj.final_x = traj.x.back();
  traj.verdict = detect_limit(traj, xi);
  return traj;
}

SolutionVerdict detect_limit(const Trajectory& traj, double xi) {
  if (traj.t.size() < 4) return SolutionVerdict::kUndetermined;
  const double t_end = traj.t.back();
  std::size_t first = traj.t.size() - 1;
  while (first > 0 && traj.t[first - 1] >= 0.1 * t_end) --first;
  if (traj.t.size() - first < 3) return SolutionVerdict::kUndetermined;

  bool falling = true, rising = true;
  for (std::size_t i = first + 1; i < traj.t.size(); ++i) {
    const double a = std::fabs(traj.x[i - 1]);
    const double b = std::fabs(traj.x[i]);
    if (b > a * (1.0 + 1e-12)) falling = false;
    if (b < a * (1.0 - 1e-12)) rising = false;
  }
  const double final_mag = std::fabs(traj.x.back());
  const double xi_mag = std::fabs(xi);
  if (falling && final_mag < 1e-4 * xi_mag) {
    return SolutionVerdict::kConvergesToZero;
  }
  if (rising && final_mag > 1e4 * std::max(xi_mag, 1.0)) {
    return SolutionVerdict::kEscapes;
  }
  return SolutionVerdict::kUndetermined;
}

}  // namespace rvdecay
