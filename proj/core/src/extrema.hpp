#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "starkecho/errors.hpp"

namespace starkecho::detail {

struct Extremum {
  double x;
  double value;
  bool is_max;
};

// Interior extrema with three-point parabolic refinement of both position
// and value. Plateau points count once.
inline std::vector<Extremum> find_extrema(const std::vector<double>& x,
                                          const std::vector<double>& y) {
  std::vector<Extremum> out;
  const size_t n = y.size();
  for (size_t i = 1; i + 1 < n; ++i) {
    const bool up = y[i] > y[i - 1] && y[i] >= y[i + 1];
    const bool dn = y[i] < y[i - 1] && y[i] <= y[i + 1];
    if (!up && !dn) continue;
    if (!out.empty() && out.back().is_max == up) continue;  // plateau tail
    const double d2 = y[i - 1] - 2.0 * y[i] + y[i + 1];
    double xe = x[i], ye = y[i];
    if (std::abs(d2) > 0.0) {
      const double delta = 0.5 * (y[i - 1] - y[i + 1]) / d2;
      if (std::abs(delta) <= 1.0) {
        xe = x[i] + delta * (x[i + 1] - x[i]);
        ye = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * delta;
      }
    }
    out.push_back({xe, ye, up});
  }
  return out;
}

// Adjacent extrema sit half a period apart. The median spacing shrugs off
// the occasional noise-split extremum that would drag a mean down.
inline double period_from_extrema(std::vector<Extremum> ex) {
  if (ex.size() < 2)
    throw NotModulatedError("fewer than two extrema in trace");
  std::vector<double> gaps(ex.size() - 1);
  for (size_t i = 0; i + 1 < ex.size(); ++i) gaps[i] = ex[i + 1].x - ex[i].x;
  const size_t mid = gaps.size() / 2;
  std::nth_element(gaps.begin(), gaps.begin() + mid, gaps.end());
  double period = 2.0 * gaps[mid];
  if (gaps.size() % 2 == 0) {
    const double lower =
        *std::max_element(gaps.begin(), gaps.begin() + mid);
    period = gaps[mid] + lower;
  }
  return period;
}

inline double wrap_half_pi(double phi) {
  const double pi = std::numbers::pi;
  while (phi > 0.5 * pi) phi -= pi;
  while (phi <= -0.5 * pi) phi += pi;
  return phi;
}

}  // namespace starkecho::detail
