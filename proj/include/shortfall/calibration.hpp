#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "shortfall/errors.hpp"
#include "shortfall/estimator.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/rng.hpp"

namespace shortfall {

// Population g(t) = E[l(xi - t)] - lambda, closed form where available:
// identity loss on any model, exponential loss on exactly-Gaussian xi.
inline std::optional<double> g_closed_form(const ModelSpec& m,
                                           const LossSpec& l, double lambda,
                                           double t,
                                           std::optional<double> theta = {}) {
  switch (l.kind) {
    case LossKind::Identity:
      return xi_mean(m, theta) - t - lambda;
    case LossKind::Exponential: {
      const auto s2 = xi_gaussian_variance(m, theta);
      if (!s2) return std::nullopt;
      return std::exp(l.beta * (xi_mean(m, theta) - t) +
                      l.beta * l.beta * *s2 / 2.0) -
             lambda;
    }
    case LossKind::PiecewisePolynomial:
      return std::nullopt;
  }
  return std::nullopt;
}

// g'(t) = -E[l'(xi - t)], same closed-form coverage.
inline std::optional<double> g_deriv_closed_form(
    const ModelSpec& m, const LossSpec& l, double lambda, double t,
    std::optional<double> theta = {}) {
  (void)lambda;
  switch (l.kind) {
    case LossKind::Identity:
      return -1.0;
    case LossKind::Exponential: {
      const auto s2 = xi_gaussian_variance(m, theta);
      if (!s2) return std::nullopt;
      return -l.beta * std::exp(l.beta * (xi_mean(m, theta) - t) +
                                l.beta * l.beta * *s2 / 2.0);
    }
    case LossKind::PiecewisePolynomial:
      return std::nullopt;
  }
  return std::nullopt;
}

// Per-bracket constants feeding the bound evaluators:
//   mu1    = inf_{t in bracket} |g'(t)|
//   B      = sup_{t in bracket} |g'(t)|
//   sigma2 = sup_{t in bracket} Var(l(xi - t))
//   eta / L1 / L2 from the loss derivative envelopes on the effective
//     argument interval [xi_lo - t_u, xi_hi - t_l]; the interval itself is
//     recorded. The xi range is the exact support where the model has one,
//     else mean +/- clamp_k stddev.
struct BracketCalibration {
  double mu1 = 0.0;
  double B = 0.0;
  double sigma2 = 0.0;
  double eta = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double arg_lo = 0.0;
  double arg_hi = 0.0;
  bool closed_form = true;
};

namespace detail {

struct GridStats {
  double mu1, B, sigma2;
};

// Monte-Carlo fallback: one fixed sample set, a 33-point t-grid, numeric
// derivative of the empirical mean curve. Deterministic given the stream.
inline GridStats grid_calibrate(const ModelSpec& m, const LossSpec& l,
                                double lambda, const Bracket& br,
                                std::optional<double> theta, RngStream& rng,
                                std::int64_t mc_m) {
  std::vector<double> xis;
  xis.reserve(static_cast<std::size_t>(mc_m));
  for (std::int64_t i = 0; i < mc_m; ++i)
    xis.push_back(draw_xi(m, theta, rng));

  constexpr int kGrid = 33;
  const double h = br.width() / (kGrid - 1);
  std::vector<double> means(kGrid), vars(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    const double t = br.lo + i * h;
    double mean = 0.0, m2 = 0.0;
    std::int64_t cnt = 0;
    for (const double xi : xis) {
      const double v = loss_eval(l, xi - t) - lambda;
      ++cnt;
      const double d = v - mean;
      mean += d / static_cast<double>(cnt);
      m2 += d * (v - mean);
    }
    means[i] = mean;
    vars[i] = m2 / static_cast<double>(mc_m - 1);
  }
  GridStats out{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  for (int i = 0; i < kGrid; ++i) {
    double deriv;
    if (i == 0)
      deriv = (means[1] - means[0]) / h;
    else if (i == kGrid - 1)
      deriv = (means[kGrid - 1] - means[kGrid - 2]) / h;
    else
      deriv = (means[i + 1] - means[i - 1]) / (2.0 * h);
    out.mu1 = std::min(out.mu1, std::abs(deriv));
    out.B = std::max(out.B, std::abs(deriv));
    out.sigma2 = std::max(out.sigma2, vars[i]);
  }
  return out;
}

}  // namespace detail

inline BracketCalibration calibrate_on_bracket(
    const ModelSpec& m, const LossSpec& l, double lambda, const Bracket& br,
    std::optional<double> theta, RngStream& mc_rng, std::int64_t mc_m = 200000,
    double clamp_k = 6.0) {
  if (!(br.lo < br.hi)) throw ConfigError("calibrate: bracket lo < hi");
  BracketCalibration out;

  // xi range for the loss-derivative envelopes
  double xi_lo, xi_hi;
  if (m.kind == ModelKind::TruncatedGaussianLoss) {
    xi_lo = m.mean - m.clip * m.stddev;
    xi_hi = m.mean + m.clip * m.stddev;
  } else {
    const double mean = xi_mean(m, theta);
    const double sd = std::sqrt(xi_variance_exact(m, theta));
    xi_lo = mean - clamp_k * sd;
    xi_hi = mean + clamp_k * sd;
  }
  out.arg_lo = xi_lo - br.hi;
  out.arg_hi = xi_hi - br.lo;
  const LossConstants lc = constants_on(l, out.arg_lo, out.arg_hi);
  out.eta = lc.eta;
  out.L1 = lc.L1;
  out.L2 = lc.L2;

  switch (l.kind) {
    case LossKind::Identity: {
      out.mu1 = 1.0;
      out.B = 1.0;
      out.sigma2 = xi_variance_exact(m, theta);  // t-independent
      out.closed_form = true;
      return out;
    }
    case LossKind::Exponential: {
      const auto s2 = xi_gaussian_variance(m, theta);
      if (s2) {
        const double mean = xi_mean(m, theta);
        const double b = l.beta;
        // |g'(t)| = b * exp(b(mean - t) + b^2 s2/2), decreasing in t
        out.mu1 = b * std::exp(b * (mean - br.hi) + b * b * *s2 / 2.0);
        out.B = b * std::exp(b * (mean - br.lo) + b * b * *s2 / 2.0);
        // Var l(xi - t) = exp(2b(mean - t) + b^2 s2) (exp(b^2 s2) - 1),
        // decreasing in t, so the sup sits at the lower endpoint
        out.sigma2 = std::exp(2.0 * b * (mean - br.lo) + b * b * *s2) *
                     (std::exp(b * b * *s2) - 1.0);
        out.closed_form = true;
        return out;
      }
      break;
    }
    case LossKind::PiecewisePolynomial:
      break;
  }

  const auto gs = detail::grid_calibrate(m, l, lambda, br, theta, mc_rng, mc_m);
  out.mu1 = gs.mu1;
  out.B = gs.B;
  out.sigma2 = gs.sigma2;
  out.closed_form = false;
  return out;
}

// Smallest nu with E[exp(X^2 / (2 nu^2))] <= 2 for X = -xi. Exact identity
// for Gaussian X; bounded models use |X| <= K => nu = K / sqrt(2 ln 2).
inline double sub_gaussian_nu(const ModelSpec& m,
                              std::optional<double> theta = {}) {
  if (m.kind == ModelKind::TruncatedGaussianLoss) {
    const double K = std::abs(m.mean) + m.clip * m.stddev;
    return K / std::sqrt(2.0 * std::log(2.0));
  }
  const double mean = -xi_mean(m, theta);
  const double s2 = *xi_gaussian_variance(m, theta);
  // E[exp(X^2/(2 v))] = (1 - s2/v)^{-1/2} exp(mean^2 / (2(v - s2))) for v > s2
  const auto moment = [&](double v) {
    return std::pow(1.0 - s2 / v, -0.5) *
           std::exp(mean * mean / (2.0 * (v - s2)));
  };
  double lo = s2 * (1.0 + 1e-12), hi = 2.0 * s2 + mean * mean;
  while (moment(hi) > 2.0) hi *= 2.0;
  for (int i = 0; i < 200 && (hi - lo) > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (moment(mid) > 2.0 ? lo : hi) = mid;
  }
  return std::sqrt(0.5 * (lo + hi));
}

}  // namespace shortfall
