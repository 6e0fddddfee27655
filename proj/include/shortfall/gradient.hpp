#pragma once

#include <cstdint>
#include <string>

#include "shortfall/errors.hpp"
#include "shortfall/estimator.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/rng.hpp"

namespace shortfall {

struct GradientEstimate {
  double value = 0.0;   // a_m / b_m
  double a_m = 0.0;     // mean l'(xi_i - t_m) * xi'_i
  double b_m = 0.0;     // mean l'(xi_i - t_m)
  double t_m = 0.0;     // root estimate from the first phase
  std::int64_t m = 0;
  double theta = 0.0;
  std::int64_t draws = 0;  // exactly 2m: m for t_m, m for the pairs
};

// Two-phase risk-gradient estimate at theta: run the projected-SA root
// finder for m fresh draws to get t_m, then average the pathwise ratio over
// m more fresh (xi, xi') pairs. The denominator is guarded at eta/2 where
// eta = inf l' with the bracket values as arguments; a batch whose b_m falls
// under the guard has effectively lost the l' > 0 floor and the ratio is
// untrustworthy.
inline GradientEstimate estimate_gradient(const ModelSpec& model, double theta,
                                          std::int64_t m,
                                          const EstimatorConfig& est,
                                          RngStream& rng) {
  if (model.kind != ModelKind::TwoAssetPortfolio)
    throw WrongKind("estimate_gradient: requires the two-asset model");
  require_theta(model, theta);
  if (m < 1) throw ConfigError("estimate_gradient: m >= 1 required");
  est.validate();

  GradientEstimate out;
  out.m = m;
  out.theta = theta;

  const auto root = estimate_at_theta(model, theta, est, m, rng, m);
  out.t_m = root.final_t;
  out.draws += root.draws;

  double acc_a = 0.0, acc_b = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    const XiSample s = draw_with_sensitivity(model, theta, rng);
    ++out.draws;
    const double lp = loss_deriv1(est.loss, s.xi - out.t_m);
    acc_a += lp * s.xi_prime;
    acc_b += lp;
  }
  out.a_m = acc_a / static_cast<double>(m);
  out.b_m = acc_b / static_cast<double>(m);

  const double eta = loss_eta_infimum(est.loss, est.bracket.lo, est.bracket.hi);
  if (out.b_m <= eta / 2.0)
    throw BmBelowEta("estimate_gradient: b_m=" + std::to_string(out.b_m) +
                     " under the guard eta/2=" + std::to_string(eta / 2.0));
  out.value = out.a_m / out.b_m;
  return out;
}

}  // namespace shortfall
