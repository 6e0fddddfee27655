#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shortfall/errors.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/rng.hpp"

namespace shortfall {

// a_k = c / k^alpha, k >= 1
struct StepSchedule {
  double c = 1.0;
  double alpha = 1.0;
};

inline double step_size(const StepSchedule& s, std::int64_t k) {
  if (k < 1) throw ConfigError("step_size: k >= 1 required");
  if (!(s.c > 0.0)) throw ConfigError("step_size: c > 0 required");
  if (s.alpha == 1.0) return s.c / static_cast<double>(k);
  return s.c / std::pow(static_cast<double>(k), s.alpha);
}

inline double project(double t, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("project: lo < hi required");
  return std::clamp(t, lo, hi);
}

struct Bracket {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

struct EstimatorConfig {
  LossSpec loss;
  double lambda = 0.0;
  Bracket bracket;
  StepSchedule schedule;
  double t0;  // starting iterate, defaults to the bracket midpoint

  EstimatorConfig() : t0(bracket.midpoint()) {}
  EstimatorConfig(LossSpec l, double lam, Bracket b, StepSchedule s)
      : loss(l), lambda(lam), bracket(b), schedule(s), t0(b.midpoint()) {}
  EstimatorConfig(LossSpec l, double lam, Bracket b, StepSchedule s, double t0_)
      : loss(l), lambda(lam), bracket(b), schedule(s), t0(t0_) {}

  void validate() const {
    if (!(bracket.lo < bracket.hi))
      throw ConfigError("estimator: bracket lo < hi required");
    if (!bracket.contains(t0))
      throw ConfigError("estimator: t0 must lie in the bracket");
    if (!(schedule.c > 0.0)) throw ConfigError("estimator: c > 0 required");
    if (!(schedule.alpha > 0.0 && schedule.alpha <= 1.0))
      throw ConfigError("estimator: alpha in (0,1] required");
  }
};

// One-sample unbiased estimate of g(t) = E[l(xi - t)] - lambda.
inline double g_hat(const LossSpec& loss, double lambda, double xi, double t) {
  return loss_eval(loss, xi - t) - lambda;
}

struct EstimatorState {
  double t = 0.0;
  std::int64_t k = 0;  // completed iterations
};

// t_k = clamp(t_{k-1} + a_k * g_hat(t_{k-1}); bracket)
inline EstimatorState sa_step(const EstimatorState& st,
                              const EstimatorConfig& cfg, double xi) {
  const std::int64_t k = st.k + 1;
  const double a = step_size(cfg.schedule, k);
  const double moved = st.t + a * g_hat(cfg.loss, cfg.lambda, xi, st.t);
  return {project(moved, cfg.bracket.lo, cfg.bracket.hi), k};
}

struct TrajectoryPoint {
  std::int64_t k;
  double t;
};

struct EstimateResult {
  std::vector<TrajectoryPoint> trajectory;
  double final_t = 0.0;
  std::int64_t draws = 0;
  // final iterate within 1e-6 * width of a bracket endpoint -- usually means
  // the bracket does not actually straddle the root
  bool endpoint_warning = false;
};

// Checkpoint ks growing by ~1.3x, always ending at n. Keeps recorded
// trajectories O(log n) for the long runs.
inline std::vector<std::int64_t> geometric_checkpoints(std::int64_t n) {
  if (n < 1) throw ConfigError("geometric_checkpoints: n >= 1 required");
  std::vector<std::int64_t> ks;
  std::int64_t k = 1;
  while (k < n) {
    ks.push_back(k);
    const auto next = static_cast<std::int64_t>(std::ceil(k * 1.3));
    k = std::max(next, k + 1);
  }
  ks.push_back(n);
  return ks;
}

namespace detail {
inline bool record_at(std::int64_t k, std::int64_t n, std::int64_t record_every,
                      const std::vector<std::int64_t>& geo, std::size_t& gi) {
  if (record_every > 0) return k % record_every == 0 || k == n;
  while (gi < geo.size() && geo[gi] < k) ++gi;
  return gi < geo.size() && geo[gi] == k;
}
}  // namespace detail

// Core projected-SA loop over an arbitrary xi source. record_every > 0
// records at its multiples plus k == n; record_every == 0 records at
// geometric checkpoints.
template <class Sampler>
EstimateResult estimate_with(Sampler&& next_xi, const EstimatorConfig& cfg,
                             std::int64_t n, std::int64_t record_every) {
  cfg.validate();
  if (n < 1) throw ConfigError("estimate: n >= 1 required");
  if (record_every < 0) throw ConfigError("estimate: record_every >= 0");

  std::vector<std::int64_t> geo;
  if (record_every == 0) geo = geometric_checkpoints(n);
  std::size_t gi = 0;

  EstimateResult out;
  EstimatorState st{cfg.t0, 0};
  for (std::int64_t k = 1; k <= n; ++k) {
    st = sa_step(st, cfg, next_xi());
    ++out.draws;
    if (detail::record_at(k, n, record_every, geo, gi))
      out.trajectory.push_back({k, st.t});
  }
  if (out.trajectory.empty() || out.trajectory.back().k != n)
    out.trajectory.push_back({n, st.t});
  out.final_t = st.t;
  const double tol = 1e-6 * cfg.bracket.width();
  out.endpoint_warning = (out.final_t - cfg.bracket.lo <= tol) ||
                         (cfg.bracket.hi - out.final_t <= tol);
  return out;
}

// Streaming estimator for the non-parameterized models.
inline EstimateResult estimate(const ModelSpec& model,
                               const EstimatorConfig& cfg, std::int64_t n,
                               RngStream& rng, std::int64_t record_every = 0) {
  if (model.kind == ModelKind::TwoAssetPortfolio)
    throw WrongKind("estimate: two-asset model needs theta; use "
                    "estimate_at_theta");
  return estimate_with([&] { return draw(model, rng); }, cfg, n, record_every);
}

// Same loop with the portfolio pinned at theta (the gradient phase uses it).
inline EstimateResult estimate_at_theta(const ModelSpec& model, double theta,
                                        const EstimatorConfig& cfg,
                                        std::int64_t n, RngStream& rng,
                                        std::int64_t record_every = 0) {
  if (model.kind != ModelKind::TwoAssetPortfolio)
    throw WrongKind("estimate_at_theta: requires the two-asset model");
  return estimate_with(
      [&] { return draw_with_sensitivity(model, theta, rng).xi; }, cfg, n,
      record_every);
}

namespace detail {
inline double empirical_g(std::span<const double> xis, const LossSpec& loss,
                          double lambda, double t) {
  double acc = 0.0;
  for (const double xi : xis) acc += loss_eval(loss, xi - t);
  return acc / static_cast<double>(xis.size()) - lambda;
}

inline double empirical_g_stderr(std::span<const double> xis,
                                 const LossSpec& loss, double lambda,
                                 double t) {
  const std::size_t m = xis.size();
  double mean = 0.0, m2 = 0.0;
  std::size_t cnt = 0;
  for (const double xi : xis) {
    const double v = loss_eval(loss, xi - t) - lambda;
    ++cnt;
    const double d = v - mean;
    mean += d / static_cast<double>(cnt);
    m2 += d * (v - mean);
  }
  if (m < 2) return 0.0;
  const double var = m2 / static_cast<double>(m - 1);
  return std::sqrt(std::max(var, 0.0) / static_cast<double>(m));
}
}  // namespace detail

// Bisection root of the sample-average g on a bracket with an empirical sign
// change. Returns t with |t - root| <= tol; iteration cap 200. The overload
// below supplies the default tolerance 1e-10 * bracket width.
inline double saa_binary_search(std::span<const double> xis,
                                const LossSpec& loss, double lambda,
                                const Bracket& bracket, double tol) {
  if (xis.empty()) throw ConfigError("saa_binary_search: empty sample set");
  if (!(bracket.lo < bracket.hi))
    throw ConfigError("saa_binary_search: bracket lo < hi required");
  if (!(tol > 0.0)) throw ConfigError("saa_binary_search: tol > 0 required");

  double lo = bracket.lo, hi = bracket.hi;
  const double g_lo = detail::empirical_g(xis, loss, lambda, lo);
  const double g_hi = detail::empirical_g(xis, loss, lambda, hi);
  if (!(g_lo > 0.0) || !(g_hi < 0.0))
    throw NoSignChange("saa_binary_search: empirical g has no sign change: "
                       "g(lo)=" + std::to_string(g_lo) +
                       " g(hi)=" + std::to_string(g_hi));

  for (int iter = 0; iter < 200 && (hi - lo) > 2.0 * tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (detail::empirical_g(xis, loss, lambda, mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double saa_binary_search(std::span<const double> xis,
                                const LossSpec& loss, double lambda,
                                const Bracket& bracket) {
  return saa_binary_search(xis, loss, lambda, bracket,
                           1e-10 * bracket.width());
}

// Doubling search outward from t = 0 on a pilot sample until the empirical g
// clears a 2-stderr margin on both sides. 64 doublings per side, then
// BracketNotFound.
inline Bracket bracket_search_on_samples(std::span<const double> xis,
                                         const LossSpec& loss, double lambda) {
  if (xis.empty()) throw ConfigError("bracket_search: empty pilot");
  const auto clears_above = [&](double t) {
    const double g = detail::empirical_g(xis, loss, lambda, t);
    return g > 2.0 * detail::empirical_g_stderr(xis, loss, lambda, t);
  };
  const auto clears_below = [&](double t) {
    const double g = detail::empirical_g(xis, loss, lambda, t);
    return g < -2.0 * detail::empirical_g_stderr(xis, loss, lambda, t);
  };

  std::optional<double> t_l, t_u;
  if (clears_above(0.0)) t_l = 0.0;
  for (double w = 1.0; !t_l; w *= 2.0) {
    if (w > std::ldexp(1.0, 64)) break;
    if (clears_above(-w)) t_l = -w;
  }
  if (!t_l) throw BracketNotFound("bracket_search: no lower endpoint with "
                                  "empirical g above its margin");
  if (clears_below(0.0)) t_u = 0.0;
  for (double w = 1.0; !t_u; w *= 2.0) {
    if (w > std::ldexp(1.0, 64)) break;
    if (clears_below(w)) t_u = w;
  }
  if (!t_u) throw BracketNotFound("bracket_search: no upper endpoint with "
                                  "empirical g below its margin");
  return {*t_l, *t_u};
}

inline Bracket bracket_search(const ModelSpec& model, const LossSpec& loss,
                              double lambda, std::int64_t pilot_m,
                              RngStream& rng,
                              std::optional<double> theta = {}) {
  if (pilot_m < 32) throw ConfigError("bracket_search: pilot_m >= 32 required");
  std::vector<double> xis;
  xis.reserve(static_cast<std::size_t>(pilot_m));
  for (std::int64_t i = 0; i < pilot_m; ++i)
    xis.push_back(draw_xi(model, theta, rng));
  return bracket_search_on_samples(xis, loss, lambda);
}

}  // namespace shortfall
