#pragma once

// Aitken delta-squared acceleration for slowly converging sequences, with a
// rough self-reported uncertainty (spread of the last accelerated terms).

#include <cmath>
#include <cstddef>
#include <vector>

namespace rvdecay {

struct AccelResult {
  double value = 0.0;
  double uncertainty = 0.0;
  bool usable = false;
};

inline AccelResult aitken_limit(const std::vector<double>& seq, int max_passes = 3) {
  AccelResult out;
  if (seq.empty()) return out;
  if (seq.size() == 1) {
    out.value = seq[0];
    out.uncertainty = std::fabs(seq[0]);
    return out;
  }
  std::vector<double> cur = seq;
  double last_value = cur.back();
  double last_step = std::fabs(cur[cur.size() - 1] - cur[cur.size() - 2]);
  for (int pass = 0; pass < max_passes && cur.size() >= 3; ++pass) {
    std::vector<double> next;
    next.reserve(cur.size() - 2);
    bool ok = true;
    for (std::size_t i = 0; i + 2 < cur.size(); ++i) {
      const double d2 = cur[i + 2] - 2.0 * cur[i + 1] + cur[i];
      double v;
      if (d2 == 0.0) {
        v = cur[i + 2];
      } else {
        const double d1 = cur[i + 2] - cur[i + 1];
        v = cur[i + 2] - d1 * d1 / d2;
      }
      if (!std::isfinite(v)) {
        ok = false;
        break;
      }
      next.push_back(v);
    }
    if (!ok || next.empty()) break;
    const double step = next.size() >= 2
                            ? std::fabs(next[next.size() - 1] - next[next.size() - 2])
                            : std::fabs(next.back() - last_value);
    // Stop once a pass no longer shrinks the spread; keep the better value.
    if (step > last_step && pass > 0) break;
    last_value = next.back();
    last_step = step;
    cur = std::move(next);
  }
  out.value = last_value;
  out.uncertainty = last_step;
  out.usable = seq.size() >= 3;
  return out;
}

}  // namespace rvdecay
