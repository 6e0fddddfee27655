#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "shortfall/errors.hpp"
#include "shortfall/estimator.hpp"
#include "shortfall/gradient.hpp"
#include "shortfall/models.hpp"
#include "shortfall/rng.hpp"

namespace shortfall {

// Gradient batch policy: a fixed m, or m = ceil(n^rho) scaled to the horizon.
struct BatchSpec {
  enum class Kind { Fixed, Horizon };
  Kind kind = Kind::Fixed;
  std::int64_t m = 1;  // Fixed
  double rho = 1.0;    // Horizon, rho in (0,1]
};

inline BatchSpec fixed_batch(std::int64_t m) {
  if (m < 1) throw ConfigError("fixed_batch: m >= 1 required");
  return {BatchSpec::Kind::Fixed, m, 1.0};
}

inline BatchSpec horizon_batch(double rho) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw ConfigError("horizon_batch: rho in (0,1] required");
  return {BatchSpec::Kind::Horizon, 1, rho};
}

inline std::int64_t batch_size(const BatchSpec& b, std::int64_t n) {
  if (n < 1) throw ConfigError("batch_size: n >= 1 required");
  if (b.kind == BatchSpec::Kind::Fixed) return b.m;
  const double p = std::pow(static_cast<double>(n), b.rho);
  const auto nearest = static_cast<std::int64_t>(std::llround(p));
  // pow(100, 0.5) may land a hair off 10.0; don't let ceil inflate it
  if (std::abs(p - static_cast<double>(nearest)) < 1e-9) return nearest;
  return static_cast<std::int64_t>(std::ceil(p));
}

struct ThetaDomain {
  double lo = 0.0;
  double hi = 1.0;
};

struct OptimizerConfig {
  ThetaDomain domain;
  double theta0 = 0.5;       // defaults to the domain midpoint via factory
  StepSchedule schedule;     // a_k = c/k
  BatchSpec batch;
  EstimatorConfig estimator; // drives the t_m phase inside each gradient
  bool clamp = true;         // projection onto the domain (diagnostic off-switch)

  void validate() const {
    if (!(domain.lo < domain.hi))
      throw ConfigError("optimizer: theta domain lo < hi required");
    if (!(theta0 >= domain.lo && theta0 <= domain.hi))
      throw ConfigError("optimizer: theta0 must lie in the domain");
    if (!(schedule.c > 0.0)) throw ConfigError("optimizer: c > 0 required");
    if (schedule.alpha != 1.0)
      throw ConfigError("optimizer: step schedule must be c/k");
    estimator.validate();
  }
};

inline OptimizerConfig make_optimizer_config(ThetaDomain dom, StepSchedule s,
                                             BatchSpec b, EstimatorConfig est) {
  OptimizerConfig cfg;
  cfg.domain = dom;
  cfg.theta0 = 0.5 * (dom.lo + dom.hi);
  cfg.schedule = s;
  cfg.batch = b;
  cfg.estimator = est;
  return cfg;
}

// theta_{k+1} = clamp(theta_k - a_k * grad; domain)
inline double sgd_step(double theta, std::int64_t k, double grad,
                       const OptimizerConfig& cfg) {
  const double moved = theta - step_size(cfg.schedule, k) * grad;
  if (!cfg.clamp) return moved;
  return project(moved, cfg.domain.lo, cfg.domain.hi);
}

struct OptTrajectoryPoint {
  std::int64_t k;
  double theta;
  double grad;
  std::int64_t m;
};

struct OptimizeResult {
  std::vector<OptTrajectoryPoint> trajectory;
  double final_theta = 0.0;
  std::int64_t total_draws = 0;  // exactly n * 2m
};

// Projected SGD over n iterations, each consuming one fresh 2m-draw gradient
// estimate with the same m = batch_size(batch, n). record_every semantics
// match estimate(): positive -> multiples plus k == n, 0 -> geometric.
inline OptimizeResult optimize(const ModelSpec& model,
                               const OptimizerConfig& cfg, std::int64_t n,
                               RngStream& rng, std::int64_t record_every = 0) {
  cfg.validate();
  if (model.kind != ModelKind::TwoAssetPortfolio)
    throw WrongKind("optimize: requires the two-asset model");
  if (n < 1) throw ConfigError("optimize: n >= 1 required");
  if (record_every < 0) throw ConfigError("optimize: record_every >= 0");

  const std::int64_t m = batch_size(cfg.batch, n);
  std::vector<std::int64_t> geo;
  if (record_every == 0) geo = geometric_checkpoints(n);
  std::size_t gi = 0;

  OptimizeResult out;
  double theta = cfg.theta0;
  for (std::int64_t k = 1; k <= n; ++k) {
    GradientEstimate g;
    try {
      g = estimate_gradient(model, theta, m, cfg.estimator, rng);
    } catch (const BmBelowEta& e) {
      throw BmBelowEta("iteration k = " + std::to_string(k) + ": " +
                       e.what());
    }
    out.total_draws += g.draws;
    theta = sgd_step(theta, k, g.value, cfg);
    if (detail::record_at(k, n, record_every, geo, gi))
      out.trajectory.push_back({k, theta, g.value, m});
  }
  if (out.trajectory.empty() || out.trajectory.back().k != n)
    out.trajectory.push_back({n, theta, 0.0, m});
  out.final_theta = theta;
  return out;
}

}  // namespace shortfall
