#include "rvdecay/regvar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rvdecay/accel.hpp"

namespace rvdecay {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct SampleSet {
  std::vector<double> lam;  // log of the sample point
  std::vector<double> phi;  // log of the function value
  bool truncated = false;
  std::string note;
};

// Geometric sweep from start toward stop; stops early at the first sample
// where h faults, vanishes, or goes non-positive, keeping the valid prefix.
SampleSet collect(const FunctionSpec& h, double start, double stop, int ppd) {
  SampleSet out;
  const double l0 = std::log10(start);
  const double l1 = std::log10(stop);
  const int n = static_cast<int>(std::lround(std::fabs(l1 - l0) * ppd)) + 1;
  for (int k = 0; k < n; ++k) {
    const double s = std::pow(10.0, l0 + (l1 - l0) * k / (n - 1));
    const EvalResult r = h.eval(s);
    if (!r.ok()) {
      out.truncated = true;
      out.note = "grid truncated at " + fmt(s) + ": " + h.ast.describe_fault(r);
      break;
    }
    if (!(r.value > 0.0)) {
      out.truncated = true;
      out.note = "grid truncated at " + fmt(s) + ": value " + fmt(r.value) +
                 " is not positive" + (r.value == 0.0 ? " (underflow?)" : "");
      break;
    }
    out.lam.push_back(std::log(s));
    out.phi.push_back(std::log(r.value));
  }
  return out;
}

VariationEstimate analyze(const SampleSet& s, int ppd, double rapid_cutoff) {
  VariationEstimate out;
  out.samples = static_cast<int>(s.lam.size());
  out.truncated = s.truncated;
  out.note = s.note;
  const std::size_t n = s.lam.size();
  if (n < 3) {
    if (!out.note.empty()) out.note += "; ";
    out.note += "only " + std::to_string(n) + " valid samples";
    return out;
  }

  std::vector<double> slope(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    slope[k] = (s.phi[k + 1] - s.phi[k]) / (s.lam[k + 1] - s.lam[k]);
  }

  // Rapid growth of the log-log slope itself: judged on the tail of the
  // valid prefix, so underflow-truncated data still gets a verdict.
  if (slope.size() >= 3) {
    const std::size_t m = std::min<std::size_t>(5, slope.size());
    bool monotone = true, signs = true;
    const double sign = slope.back() > 0 ? 1.0 : -1.0;
    for (std::size_t k = slope.size() - m; k < slope.size(); ++k) {
      if (slope[k] * sign <= 0.0) signs = false;
      if (k > slope.size() - m &&
          std::fabs(slope[k]) <= std::fabs(slope[k - 1])) {
        monotone = false;
      }
    }
    if (monotone && signs && std::fabs(slope.back()) > rapid_cutoff) {
      out.kind = sign > 0 ? VariationKind::kRapidPlus : VariationKind::kRapidMinus;
      out.index = sign * std::numeric_limits<double>::infinity();
      out.uncertainty = std::fabs(slope.back()) - std::fabs(slope[slope.size() - m]);
      if (!out.note.empty()) out.note += "; ";
      out.note += "log-log slope grows without settling (last " + fmt(slope.back()) + ")";
      return out;
    }
  }

  if (n < 6) {
    if (!out.note.empty()) out.note += "; ";
    out.note += "too few samples for a stable exponent fit";
    return out;
  }

  // Global least-squares slope of phi against lam, with residual statistics.
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += s.lam[k];
    my += s.phi[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (s.lam[k] - mx) * (s.lam[k] - mx);
    sxy += (s.lam[k] - mx) * (s.phi[k] - my);
  }
  const double b = sxy / sxx;
  const double a = my - b * mx;
  double ss_res = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = s.phi[k] - (a + b * s.lam[k]);
    ss_res += r * r;
  }
  const double rms = std::sqrt(ss_res / n);
  const double se = n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : rms;

  // Per-decade slope means, accelerated toward the endpoint.
  std::vector<double> decade;
  for (std::size_t j = 0; (j + 1) * ppd <= slope.size(); ++j) {
    double sum = 0;
    for (std::size_t k = j * ppd; k < (j + 1) * ppd; ++k) sum += slope[k];
    decade.push_back(sum / ppd);
  }

  if (decade.size() >= 3) {
    const AccelResult ak = aitken_limit(decade);
    out.index = ak.value;
    out.uncertainty = std::max({ak.uncertainty, 1e-6, 0.5 * std::fabs(ak.value - b)});
    // Conclusive only if the decade slopes head somewhere: lots of wiggle
    // with no net drift means the data is not power-like at all.
    double tv = 0;
    for (std::size_t j = 0; j + 1 < decade.size(); ++j) {
      tv += std::fabs(decade[j + 1] - decade[j]);
    }
    const double net = std::fabs(decade.back() - decade.front());
    if (tv > 3.0 * std::max(net, 0.05)) {
      if (!out.note.empty()) out.note += "; ";
      out.note += "per-decade slopes wander (total variation " + fmt(tv) +
                  " vs net drift " + fmt(net) + "), not power-like";
      return out;
    }
  } else {
    out.index = b;
    out.uncertainty = std::max(se, 1e-6);
    if (rms > std::max(0.1 * std::fabs(b), 0.05)) {
      if (!out.note.empty()) out.note += "; ";
      out.note += "log-log fit residual " + fmt(rms) + " too large for slope " + fmt(b);
      return out;
    }
  }

  out.kind = VariationKind::kRegular;
  return out;
}

}  // namespace

VariationEstimate variation_index_at_zero(const FunctionSpec& h,
                                          const VariationGrid& grid) {
  return analyze(collect(h, grid.start, grid.stop, grid.points_per_decade),
                 grid.points_per_decade, grid.rapid_cutoff);
}

VariationEstimate variation_index_at_infinity(const FunctionSpec& h,
                                              const VariationGrid& grid) {
  return analyze(collect(h, grid.start, grid.stop, grid.points_per_decade),
                 grid.points_per_decade, grid.rapid_cutoff);
}

std::vector<double> scaling_ratio_curve(const FunctionSpec& h, double lambda,
                                        const std::vector<double>& ts) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) {
    const double denom = h(t);
    const double numer = h(lambda * t);
    if (!(denom > 0.0) || !(numer > 0.0)) {
      throw std::invalid_argument("scaling ratios need h > 0, got h(" + fmt(t) +
                                  ") = " + fmt(denom) + ", h(" + fmt(lambda * t) +
                                  ") = " + fmt(numer));
    }
    out.push_back(numer / denom);
  }
  return out;
}

double karamata_residual(const FlowMap& fm, double x, double beta) {
  if (!(beta > 1.0)) throw std::invalid_argument("karamata residual needs beta > 1");
  if (!(x > 0.0)) throw std::invalid_argument("karamata residual needs x > 0");
  const double fx = fm.f()(x);
  return fm.F(x) * (beta - 1.0) * fx / x - 1.0;
}

}  // namespace rvdecay
