#pragma once

#include <cmath>
#include <span>
#include <string>

#include "shortfall/errors.hpp"

namespace shortfall {

struct RatePoint {
  double x;  // e.g. sample size n
  double y;  // e.g. empirical mse
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log10 space
  double r2 = 0.0;
};

// OLS in log10-log10 space. Needs >= 3 points; all coordinates positive.
inline RateFit fit_rate(std::span<const RatePoint> pts) {
  if (pts.size() < 3)
    throw ConfigError("fit_rate: at least 3 points required, got " +
                      std::to_string(pts.size()));
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pts) {
    if (!(p.x > 0.0) || !(p.y > 0.0))
      throw NonPositiveValue("fit_rate: all points must be positive");
    const double lx = std::log10(p.x), ly = std::log10(p.y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double n = static_cast<double>(pts.size());
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw ConfigError("fit_rate: x values must be distinct");
  RateFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (const auto& p : pts) {
    const double ly = std::log10(p.y);
    const double pred = f.intercept + f.slope * std::log10(p.x);
    ss_res += (ly - pred) * (ly - pred);
    ss_tot += (ly - ybar) * (ly - ybar);
  }
  f.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return f;
}

// Two-point slope used for the cumulative-slope CSV column while fewer than
// three rows exist.
inline double two_point_slope(const RatePoint& a, const RatePoint& b) {
  if (!(a.x > 0.0) || !(a.y > 0.0) || !(b.x > 0.0) || !(b.y > 0.0))
    throw NonPositiveValue("two_point_slope: positive coordinates required");
  return (std::log10(b.y) - std::log10(a.y)) /
         (std::log10(b.x) - std::log10(a.x));
}

}  // namespace shortfall
