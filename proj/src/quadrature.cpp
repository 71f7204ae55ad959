#include "rvdecay/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace rvdecay {

namespace {

// Legendre polynomial P_n and its derivative at x, by the three-term
// recurrence (j P_j = (2j-1) x P_{j-1} - (j-1) P_{j-2}).
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

GaussLegendre::GaussLegendre(int points) {
  if (points < 2) throw std::invalid_argument("rule needs at least 2 points");
  nodes_.resize(points);
  weights_.resize(points);
  const double pi = std::acos(-1.0);
  for (int k = 0; k < (points + 1) / 2; ++k) {
    double x = std::cos(pi * (k + 0.75) / (points + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      auto [p, dp] = legendre(points, x);
      const double step = p / dp;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    auto [p, dp] = legendre(points, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // k = 0 is the largest positive root; mirror to fill both halves.
    nodes_[k] = -x;
    weights_[k] = w;
    nodes_[points - 1 - k] = x;
    weights_[points - 1 - k] = w;
  }
}

const GaussLegendre& GaussLegendre::standard() {
  static const GaussLegendre rule(10);
  return rule;
}

}  // namespace rvdecay
