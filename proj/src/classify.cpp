#include "rvdecay/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>

#include "json.hpp"
#include "rvdecay/accel.hpp"
#include "rvdecay/quadrature.hpp"
#include "rvdecay/regvar.hpp"

namespace rvdecay {

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// estimate_L

LimitEstimate estimate_L(const FunctionSpec& g, const FlowMap& fm,
                         const LimitGrid& grid) {
  LimitEstimate out;
  bool overflowed = false;
  double t = grid.t0;
  for (int k = 0; k <= grid.doublings; ++k, t *= 2.0) {
    double scale = 0.0;
    try {
      scale = fm.comparison_scale(t);
    } catch (const FlowMapError& e) {
      out.truncated = true;
      out.note = "comparison scale unavailable at t = " + fmt(t) + ": " + e.what();
      break;
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      out.truncated = true;
      out.note = "comparison scale degenerated to " + fmt(scale) +
                 " at t = " + fmt(t);
      break;
    }
    const EvalResult gv = g.eval(t);
    if (!gv.ok()) {
      out.truncated = true;
      out.note = "g faulted at t = " + fmt(t) + ": " + g.ast.describe_fault(gv);
      break;
    }
    const double r = gv.value / scale;
    if (!std::isfinite(r)) {
      overflowed = true;
      out.truncated = true;
      break;
    }
    out.times.push_back(t);
    out.ratios.push_back(r);
  }

  const std::vector<double>& r = out.ratios;
  const std::size_t n = r.size();
  if (n < 4) {
    out.verdict = LimitVerdict::kUndetermined;
    if (out.note.empty()) out.note = "too few usable ratio samples";
    return out;
  }

  const double R = r[n - 1];
  std::vector<double> d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) d[k] = r[k + 1] - r[k];
  out.uncertainty = std::fabs(d.back());

  const std::size_t m = std::min<std::size_t>(5, d.size());
  bool increasing = true, decreasing = true;
  for (std::size_t k = d.size() - m; k < d.size(); ++k) {
    increasing = increasing && d[k] > 0.0;
    decreasing = decreasing && d[k] < 0.0;
  }

  if (increasing && (R > grid.divergence_cap || overflowed)) {
    out.verdict = LimitVerdict::kInfinite;
    out.value = std::numeric_limits<double>::infinity();
    out.uncertainty = std::numeric_limits<double>::infinity();
    out.note = "ratio rises past " + fmt(grid.divergence_cap) +
               " and keeps growing";
    return out;
  }
  if (decreasing && std::fabs(R) < grid.vanish_floor) {
    out.verdict = LimitVerdict::kZero;
    out.value = 0.0;
    out.uncertainty = std::fabs(R);
    out.note = "ratio falls below " + fmt(grid.vanish_floor) +
               " and keeps dropping";
    return out;
  }

  // Flattening: successive differences shrink geometrically over the tail,
  // so the sequence is converging and worth accelerating.
  bool flattening = false;
  if (d.size() >= 4) {
    flattening = true;
    for (std::size_t j = d.size() - 3; j < d.size(); ++j) {
      const double prev = d[j - 1], cur = d[j];
      if (prev == 0.0) {
        if (cur != 0.0) flattening = false;
        continue;
      }
      if (!(std::fabs(cur / prev) <= 0.97)) flattening = false;
    }
  }
  if (std::fabs(d.back()) <= 1e-13 * std::max(1.0, std::fabs(R))) {
    flattening = true;  // already numerically flat
  }

  if (flattening) {
    const AccelResult ak = aitken_limit(r);
    const double value = ak.usable ? ak.value : R;
    const double unc =
        std::max(std::fabs(d.back()), ak.usable ? ak.uncertainty : 0.0);
    if (value <= 0.0) {
      if (decreasing) {
        out.verdict = LimitVerdict::kZero;
        out.value = 0.0;
        out.uncertainty = std::max(unc, std::fabs(R));
        out.note = "accelerated limit is nonpositive on a falling tail";
      } else {
        out.verdict = LimitVerdict::kUndetermined;
        out.value = value;
        out.uncertainty = unc;
        out.note = "accelerated limit is nonpositive but the tail is not falling";
      }
      return out;
    }
    if (unc >= value) {
      out.verdict = LimitVerdict::kUndetermined;
      out.value = value;
      out.uncertainty = unc;
      out.note = "uncertainty " + fmt(unc) + " swallows the accelerated limit " +
                 fmt(value);
      return out;
    }
    out.verdict = LimitVerdict::kFinite;
    out.value = value;
    out.uncertainty = unc;
    out.note = "ratio flattens; limit accelerated from the tail";
    return out;
  }

  if (increasing) {
    out.verdict = LimitVerdict::kInfinite;
    out.value = std::numeric_limits<double>::infinity();
    out.uncertainty = std::numeric_limits<double>::infinity();
    out.note = "ratio keeps rising without flattening";
    return out;
  }

  out.verdict = LimitVerdict::kUndetermined;
  if (out.note.empty()) {
    out.note = "ratio neither settles nor diverges over the sampled horizon";
  }
  return out;
}

// ---------------------------------------------------------------------------
// lambda_star

double lambda_star(double L, double beta, bool rapid) {
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw std::invalid_argument("lambda_star: L must be positive and finite, got " +
                                fmt(L, "%.17g"));
  }
  if (rapid) return 1.0 / (1.0 + L);
  if (!(beta > 1.0) || !std::isfinite(beta)) {
    throw std::invalid_argument(
        "lambda_star: beta must be finite and exceed 1, got " + fmt(beta, "%.17g"));
  }
  const double p = beta / (beta - 1.0);
  const auto h = [p](double lam) { return (1.0 - lam) * std::pow(lam, -p); };
  // h decreases from +infinity at 0+ to 0 at 1; bracket and bisect.
  double lo = 0.5;
  while (!(h(lo) > L)) lo *= 0.5;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > L) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// integrable_g

GIntegralEstimate integrable_g(const FunctionSpec& g, double horizon) {
  GIntegralEstimate out;
  const auto gf = [&g](double t) {
    const EvalResult r = g.eval(t);
    if (!r.ok()) throw EvalDomainError(g.ast.describe_fault(r), t);
    return r.value;
  };
  bool tol_met = true;
  try {
    const QuadratureResult head = integrate_adaptive(gf, 0.0, 1.0, 1e-10, 1e-300, 44);
    tol_met = head.converged;
    double total = head.value;
    std::vector<double> inc;
    for (double a = 1.0; a < horizon; a *= 2.0) {
      const QuadratureResult q =
          integrate_adaptive(gf, a, 2.0 * a, 1e-10, 1e-300, 44);
      tol_met = tol_met && q.converged;
      inc.push_back(q.value);
      total += q.value;
      if (std::fabs(q.value) <= 1e-18 * std::max(1.0, std::fabs(total))) {
        break;  // the tail is already negligible
      }
    }
    if (!tol_met) {
      out.note = "quadrature tolerance was not met everywhere; ";
    }
    const std::size_t n = inc.size();
    if (n < 6) {
      if (n >= 1 &&
          std::fabs(inc.back()) <= 1e-18 * std::max(1.0, std::fabs(total))) {
        out.verdict = GIntegrability::kYes;
        out.value = total;
        out.note += "octave contributions vanished early";
        return out;
      }
      out.verdict = GIntegrability::kUnknown;
      out.note += "too few octaves to judge the tail";
      return out;
    }
    bool nondecreasing = true;
    for (std::size_t k = n - 5; k < n; ++k) {
      if (inc[k] < inc[k - 1] * (1.0 - 1e-12)) nondecreasing = false;
    }
    if (nondecreasing && inc.back() > 0.0) {
      out.verdict = GIntegrability::kNo;
      out.note += "octave contributions stop shrinking; the integral grows "
                  "without bound";
      return out;
    }
    if (std::fabs(inc.back()) <= 1e-18 * std::max(1.0, std::fabs(total))) {
      out.verdict = GIntegrability::kYes;
      out.value = total;
      out.note += "octave contributions vanished before the horizon";
      return out;
    }
    const double rho = inc[n - 1] / inc[n - 2];
    if (rho > 0.0 && rho < 0.9) {
      out.verdict = GIntegrability::kYes;
      out.value = total + inc.back() * rho / (1.0 - rho);
      out.note += "geometric octave tail (ratio " + fmt(rho) + ") extrapolated";
      return out;
    }
    out.verdict = GIntegrability::kUnknown;
    out.note += "octave contributions neither settle nor clearly persist";
    return out;
  } catch (const EvalDomainError& e) {
    out.verdict = GIntegrability::kUnknown;
    out.note = std::string("g faulted while integrating: ") + e.what();
    return out;
  }
}

// ---------------------------------------------------------------------------
// RegimeReport

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::kPreserved: return "Preserved";
    case Regime::kCritical: return "Critical";
    case Regime::kDominated: return "Dominated";
    case Regime::kRejected: return "Rejected";
  }
  return "Rejected";
}

int RegimeReport::exit_code() const {
  if (inconclusive) return 3;
  if (regime == Regime::kRejected) return 2;
  return 0;
}

std::string RegimeReport::to_json(int indent) const {
  using nlohmann::ordered_json;
  ordered_json j;
  if (beta_rapid) {
    j["beta"] = "rapid";
  } else if (beta_known) {
    j["beta"] = beta;
  } else {
    j["beta"] = nullptr;
  }
  if (theta_rapid) {
    j["theta"] = "rapid";
  } else if (theta_known) {
    j["theta"] = theta;
  } else {
    j["theta"] = nullptr;
  }
  if (!L_estimated) {
    j["L_verdict"] = nullptr;
    j["L_value"] = nullptr;
  } else {
    switch (L.verdict) {
      case LimitVerdict::kZero:
        j["L_verdict"] = "zero";
        j["L_value"] = 0.0;
        break;
      case LimitVerdict::kFinite:
        j["L_verdict"] = "finite";
        j["L_value"] = L.value;
        break;
      case LimitVerdict::kInfinite:
        j["L_verdict"] = "infinite";
        j["L_value"] = nullptr;
        break;
      case LimitVerdict::kUndetermined:
        j["L_verdict"] = "undetermined";
        j["L_value"] = nullptr;
        break;
    }
  }
  if (has_lambda) {
    j["lambda_star"] = lambda;
  } else {
    j["lambda_star"] = nullptr;
  }
  j["regime"] = regime_name(regime);
  if (predicted_rate.empty()) {
    j["predicted_rate"] = nullptr;
  } else {
    j["predicted_rate"] = predicted_rate;
  }
  if (!has_x_over_y) {
    j["x_over_y_limit"] = nullptr;
  } else if (x_over_y_infinite) {
    j["x_over_y_limit"] = "infinite";
  } else {
    j["x_over_y_limit"] = x_over_y;
  }
  switch (g_integral.verdict) {
    case GIntegrability::kYes: j["g_integrable"] = "yes"; break;
    case GIntegrability::kNo: j["g_integrable"] = "no"; break;
    case GIntegrability::kUnknown: j["g_integrable"] = "unknown"; break;
  }
  if (has_solution_index) {
    j["solution_rv_index"] = solution_index;
  } else {
    j["solution_rv_index"] = nullptr;
  }
  j["notes"] = notes;
  if (g_integral.verdict == GIntegrability::kYes) {
    j["g_integral_estimate"] = g_integral.value;
  } else {
    j["g_integral_estimate"] = nullptr;
  }
  j["reflected"] = reflected;
  if (reject_reason.empty()) {
    j["reject_reason"] = nullptr;
  } else {
    j["reject_reason"] = reject_reason;
  }
  j["inconclusive"] = inconclusive;
  return j.dump(indent);
}

// ---------------------------------------------------------------------------
// classify

namespace {

// The reported solution index measures x(t) itself against powers of t.  A
// second convention measures the drop through f instead and lands on
// -beta/(beta-1); the report commits to the first and says so, rather than
// silently picking one.
constexpr const char* kIndexReadingNote =
    "solution_rv_index is the power-law index of x(t) itself, -1/(beta-1); "
    "measured through f the corresponding index would be -beta/(beta-1)";

RegimeReport rejected(RegimeReport rep, std::string reason,
                      bool inconclusive = false) {
  rep.regime = Regime::kRejected;
  rep.reject_reason = std::move(reason);
  rep.inconclusive = inconclusive;
  return rep;
}

}  // namespace

RegimeReport classify(const ProblemSpec& p0, const ClassifyOptions& opts) {
  RegimeReport rep;

  const ValidationResult v = validate_problem(p0);
  if (v.g_identically_zero) {
    return rejected(std::move(rep),
                    "g is identically zero on the sampled range; run the "
                    "unperturbed flow instead (simulate --unperturbed)");
  }
  ProblemSpec p = p0;
  if (!v.ok) {
    if (!v.reflectable) return rejected(std::move(rep), v.summary());
    p = reflect_problem(p0);
    rep.reflected = true;
    rep.notes.push_back(
        "problem mirrored to the positive side: f <- -f(-x), g <- -g, "
        "xi <- -xi");
    const ValidationResult v2 = validate_problem(p);
    if (!v2.ok) {
      return rejected(std::move(rep),
                      "mirrored problem still fails validation: " + v2.summary());
    }
  }

  std::optional<FlowMap> fm;
  try {
    fm.emplace(p.f, opts.flow_rel_tol);
  } catch (const FlowMapError& e) {
    return rejected(std::move(rep),
                    std::string("comparison clock unavailable: ") + e.what());
  }

  // Decay exponent of f at the origin.
  const VariationEstimate fe = variation_index_at_zero(p.f);
  double beta_used = 0.0;
  double beta_unc = 0.0;
  bool rapid = false;
  if (fe.kind == VariationKind::kRapidPlus) {
    rapid = true;
    rep.beta_known = true;
    rep.beta_rapid = true;
    rep.notes.push_back("f flattens faster than every power at 0");
  } else if (fe.kind == VariationKind::kRapidMinus) {
    return rejected(std::move(rep),
                    "f grows without bound approaching 0; the restoring "
                    "assumption f(0) = 0 fails");
  } else if (fe.regular()) {
    rep.beta_known = true;
    rep.beta = fe.index;
    rep.beta_uncertainty = fe.uncertainty;
    beta_used = fe.index;
    beta_unc = fe.uncertainty;
  }
  if (p.beta_hint) {
    if (rapid) {
      rep.notes.push_back("beta hint " + fmt(*p.beta_hint) +
                          " ignored: f is on the rapid branch");
    } else {
      if (rep.beta_known &&
          std::fabs(beta_used - *p.beta_hint) >
              0.05 * std::max(1.0, std::fabs(*p.beta_hint))) {
        rep.notes.push_back("measured f exponent " + fmt(beta_used) + " +/- " +
                            fmt(beta_unc) + " disagrees with hint " +
                            fmt(*p.beta_hint) + " by more than 5%");
      }
      beta_used = *p.beta_hint;
      beta_unc = 0.0;
      rep.beta_known = true;
      rep.beta = beta_used;
      rep.beta_uncertainty = 0.0;
    }
  } else if (!rep.beta_known) {
    return rejected(std::move(rep),
                    "decay exponent of f at 0 could not be established" +
                        (fe.note.empty() ? std::string() : ": " + fe.note),
                    /*inconclusive=*/true);
  }
  if (!rapid && beta_used - 2.0 * beta_unc <= 1.0) {
    return rejected(std::move(rep),
                    "decay exponent of f at 0 must exceed 1; got " +
                        fmt(beta_used) + " +/- " + fmt(beta_unc));
  }
  if (!fe.note.empty()) rep.notes.push_back("f index at 0: " + fe.note);

  // Decay exponent of g at infinity (theta > 0 means decay).
  const VariationEstimate ge = variation_index_at_infinity(p.g);
  double theta_unc = 0.0;
  if (ge.kind == VariationKind::kRapidMinus) {
    rep.theta_known = true;
    rep.theta_rapid = true;
    rep.theta_positive = true;
    rep.notes.push_back("g decays faster than every power along the tail");
  } else if (ge.kind == VariationKind::kRapidPlus) {
    rep.notes.push_back("g grows faster than every power along the tail");
  } else if (ge.regular()) {
    rep.theta_known = true;
    rep.theta = -ge.index;
    rep.theta_uncertainty = ge.uncertainty;
    theta_unc = ge.uncertainty;
  }
  if (p.theta_hint) {
    if (rep.theta_rapid) {
      rep.notes.push_back("theta hint " + fmt(*p.theta_hint) +
                          " ignored: g is on the rapid branch");
    } else {
      if (rep.theta_known &&
          std::fabs(rep.theta - *p.theta_hint) >
              0.05 * std::max(1.0, std::fabs(*p.theta_hint))) {
        rep.notes.push_back("measured g decay exponent " + fmt(rep.theta) +
                            " +/- " + fmt(theta_unc) +
                            " disagrees with hint " + fmt(*p.theta_hint) +
                            " by more than 5%");
      }
      rep.theta = *p.theta_hint;
      rep.theta_uncertainty = 0.0;
      theta_unc = 0.0;
      rep.theta_known = true;
    }
  }
  if (rep.theta_known && !rep.theta_rapid) {
    rep.theta_positive = rep.theta > std::max(2.0 * theta_unc, 0.05);
  }
  if (p.theta_hint && *p.theta_hint > 0.0) rep.theta_positive = true;
  if (!ge.note.empty()) rep.notes.push_back("g index at infinity: " + ge.note);

  // The driving limit.
  rep.L = estimate_L(p.g, *fm, opts.limit_grid);
  rep.L_estimated = true;

  switch (rep.L.verdict) {
    case LimitVerdict::kZero: {
      rep.regime = Regime::kPreserved;
      rep.has_lambda = true;
      rep.lambda = 1.0;
      rep.predicted_rate = "F(x)/t -> 1";
      rep.has_x_over_y = true;
      rep.x_over_y = 1.0;
      rep.has_solution_index = true;
      rep.solution_index = rapid ? 0.0 : -1.0 / (beta_used - 1.0);
      if (!rapid) rep.notes.push_back(kIndexReadingNote);
      break;
    }
    case LimitVerdict::kFinite: {
      rep.regime = Regime::kCritical;
      const double lam = lambda_star(rep.L.value, beta_used, rapid);
      rep.has_lambda = true;
      rep.lambda = lam;
      rep.predicted_rate = "F(x)/t -> " + fmt(lam);
      rep.has_x_over_y = true;
      rep.has_solution_index = true;
      if (rapid) {
        rep.x_over_y = 1.0;
        rep.solution_index = 0.0;
      } else {
        rep.x_over_y = std::pow(lam, -1.0 / (beta_used - 1.0));
        rep.solution_index = -1.0 / (beta_used - 1.0);
        rep.notes.push_back(kIndexReadingNote);
      }
      rep.notes.push_back("L = " + fmt(rep.L.value) + " +/- " +
                          fmt(rep.L.uncertainty));
      if (rep.L.uncertainty >= rep.L.value) rep.inconclusive = true;
      break;
    }
    case LimitVerdict::kInfinite: {
      rep.regime = Regime::kDominated;
      const bool tracking =
          rep.theta_positive || p.flags.g_asymptotically_decreasing;
      rep.predicted_rate =
          tracking ? "f(x)/g(t) -> 1 and F(x)/t -> 0" : "F(x)/t -> 0";
      if (!tracking) {
        rep.notes.push_back(
            "tracking f(x)/g(t) -> 1 needs an eventually decaying g; not "
            "certified from samples");
      }
      rep.has_x_over_y = true;
      rep.x_over_y_infinite = true;
      if (rep.theta_rapid) {
        rep.notes.push_back(
            "x follows f^{-1}(g), dropping faster than every power");
      } else if (rep.theta_known && rep.theta >= 0.0) {
        rep.has_solution_index = true;
        rep.solution_index = rapid ? 0.0 : -rep.theta / beta_used;
      }
      break;
    }
    case LimitVerdict::kUndetermined: {
      return rejected(std::move(rep),
                      "the perturbation-to-scale ratio did not resolve: " +
                          rep.L.note,
                      /*inconclusive=*/true);
    }
  }

  // Monotonicity survey of f near 0; only a note, never a rejection.
  if (!p.flags.monotone_envelope_assumed) {
    bool monotone = true;
    double prev = 0.0;
    bool have_prev = false;
    for (int k = 0; k <= 24; ++k) {
      const double x = std::pow(10.0, -8.0 + 6.0 * k / 24.0);
      const EvalResult fr = p.f.eval(x);
      if (!fr.ok()) continue;
      if (have_prev && fr.value < prev * (1.0 - 1e-9)) monotone = false;
      prev = fr.value;
      have_prev = true;
    }
    if (!monotone) {
      rep.notes.push_back(
          "f is not monotone on the sampled window near 0; the comparison "
          "clock assumes a monotone envelope there");
    }
  }

  rep.g_integral = integrable_g(p.g, opts.g_integral_horizon);

  return rep;
}

}  // namespace rvdecay
