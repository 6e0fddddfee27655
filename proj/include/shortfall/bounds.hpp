#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "shortfall/errors.hpp"

namespace shortfall {

// Inputs to the finite-sample error bounds. Which fields matter depends on
// the evaluator; every evaluator validates what it reads.
//   mu1       lower bound on |g'| over the bracket (estimation)
//   mu2       curvature lower bound of the risk in theta (optimization)
//   c, alpha  step schedule a_k = c/k^alpha
//   sigma2    sup over the bracket of Var(l(xi - t))
//   init_err2 squared distance of the start from the target
//   B         upper bound on |g'| over the bracket
//   L1        Lipschitz constant of l on the effective argument interval
//   nu        sub-Gaussian scale of X = -xi
//   n0        first index where the relevant step-size smallness holds
struct BoundParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double c = 0.0;
  double alpha = 1.0;
  double sigma2 = 0.0;
  double init_err2 = 0.0;
  double B = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double nu = 0.0;
  std::int64_t n0 = 1;
};

namespace detail {
inline void require(bool ok, const char* msg) {
  if (!ok) throw ConfigError(msg);
}
inline void regime(bool ok, const std::string& inequality) {
  if (!ok) throw RegimeViolation("regime violation: require " + inequality);
}
}  // namespace detail

// MSE bound for the projected-SA estimator with a_k = c/k tuned against a
// known mu1 (regime 1/2 < mu1*c < 1):
//   init_err2 / n^{2 mu1 c}
//   + sigma2 * 2^{2 mu1 c} * c^2 / ((2 mu1 c - 1) * n)
inline double estimator_mse_bound_tuned(const BoundParams& p, std::int64_t n) {
  detail::require(n >= 1, "bound: n >= 1");
  detail::require(p.c > 0.0, "bound: c > 0");
  detail::require(p.mu1 > 0.0, "bound: mu1 > 0");
  detail::require(p.sigma2 >= 0.0, "bound: sigma2 >= 0");
  detail::require(p.init_err2 >= 0.0, "bound: init_err2 >= 0");
  const double muc = p.mu1 * p.c;
  detail::regime(muc > 0.5 && muc < 1.0,
                 "mu1*c in (1/2,1), got mu1*c=" + std::to_string(muc));
  const double nd = static_cast<double>(n);
  return p.init_err2 / std::pow(nd, 2.0 * muc) +
         p.sigma2 * std::pow(2.0, 2.0 * muc) * p.c * p.c /
             ((2.0 * muc - 1.0) * nd);
}

// High-probability bound companion of the tuned MSE bound; adds the
// deviation term driven by
//   C1 = (2 mu1 c - 1) / (2^{4 mu1 c + 6} c^2 L1^2 nu^2),
// and needs the extra regime c * L1^2 < mu1. delta in (0,1]:
//   sqrt(log(1/delta) / (C1 n)) + sqrt(init_err2)/n^{mu1 c}
//   + c * sqrt(sigma2) * 2^{2 mu1 c} / sqrt((2 mu1 c - 1) n)
inline double estimator_hp_bound_tuned(const BoundParams& p, std::int64_t n,
                                       double delta) {
  detail::require(n >= 1, "bound: n >= 1");
  detail::require(p.c > 0.0, "bound: c > 0");
  detail::require(p.mu1 > 0.0, "bound: mu1 > 0");
  detail::require(p.sigma2 >= 0.0, "bound: sigma2 >= 0");
  detail::require(p.init_err2 >= 0.0, "bound: init_err2 >= 0");
  detail::require(p.L1 > 0.0, "bound: L1 > 0");
  detail::require(p.nu > 0.0, "bound: nu > 0");
  detail::require(delta > 0.0 && delta <= 1.0, "bound: delta in (0,1]");
  const double muc = p.mu1 * p.c;
  detail::regime(muc > 0.5 && muc < 1.0,
                 "mu1*c in (1/2,1), got mu1*c=" + std::to_string(muc));
  detail::regime(p.c * p.L1 * p.L1 < p.mu1,
                 "c*L1^2 < mu1, got c*L1^2=" +
                     std::to_string(p.c * p.L1 * p.L1) +
                     " mu1=" + std::to_string(p.mu1));
  const double nd = static_cast<double>(n);
  const double C1 = (2.0 * muc - 1.0) / (std::pow(2.0, 4.0 * muc + 6.0) *
                                         p.c * p.c * p.L1 * p.L1 * p.nu * p.nu);
  return std::sqrt(std::log(1.0 / delta) / (C1 * nd)) +
         std::sqrt(p.init_err2) / std::pow(nd, muc) +
         p.c * std::sqrt(p.sigma2) * std::pow(2.0, 2.0 * muc) /
             std::sqrt((2.0 * muc - 1.0) * nd);
}

// Universal-step MSE bounds: no mu1 knowledge used by the algorithm, the
// bound only needs the step smallness index n0 with mu1 * a_{n0} < 1.
enum class StepCase { Harmonic, Polynomial };

// Harmonic (a_k = c/k):
//   C(n0) * (init_err2 + sigma2 pi^2/6) / n^{2 mu1 c} + K1(n),
//   C(n0) = (1 + c^2 B^2)^{n0} (n0 + 1)^{2 mu1 c}
//   K1 = 2^{4 mu1 c} c^2 sigma2 / ((2 mu1 c - 1) n)        if mu1 c > 1/2
//        2 sigma2 c^2 log(n+1) / n                          if mu1 c = 1/2
//        sigma2 2^{2 mu1 c + 1} c^2 / ((1 - 2 mu1 c) n^{2 mu1 c})  otherwise
// Polynomial (a_k = c/k^alpha, alpha in (0,1)):
//   C(n0) * (init_err2 + sigma2 c^2 n0) * exp(-2 mu1 c n^{1-alpha}/(1-alpha))
//   + 2 sigma2 c^2 (2 mu1 c)^{alpha/(1-alpha)} / ((1-alpha) n^alpha),
//   C(n0) = (1 + c^2 B^2)^{n0} exp(2 mu1 c n0^{1-alpha}/(1-alpha))
inline double estimator_mse_bound_universal(const BoundParams& p,
                                            std::int64_t n, StepCase sc) {
  detail::require(n >= 1, "bound: n >= 1");
  detail::require(p.c > 0.0, "bound: c > 0");
  detail::require(p.mu1 > 0.0, "bound: mu1 > 0");
  detail::require(p.sigma2 >= 0.0, "bound: sigma2 >= 0");
  detail::require(p.init_err2 >= 0.0, "bound: init_err2 >= 0");
  detail::require(p.B >= 0.0, "bound: B >= 0");
  detail::require(p.n0 >= 1, "bound: n0 >= 1");
  detail::require(n >= p.n0, "bound: n >= n0");
  const double nd = static_cast<double>(n);
  const double n0d = static_cast<double>(p.n0);
  const double muc = p.mu1 * p.c;

  if (sc == StepCase::Harmonic) {
    if (p.alpha != 1.0)
      throw CaseMismatch("harmonic step case requires alpha == 1");
    const double a_n0 = p.c / n0d;
    detail::regime(p.mu1 * a_n0 < 1.0,
                   "mu1*a_n0 < 1, got mu1*a_n0=" + std::to_string(p.mu1 * a_n0));
    const double Cn0 =
        std::pow(1.0 + p.c * p.c * p.B * p.B, n0d) * std::pow(n0d + 1.0, 2.0 * muc);
    const double pi2_6 = 3.14159265358979323846 * 3.14159265358979323846 / 6.0;
    const double lead = Cn0 * (p.init_err2 + p.sigma2 * pi2_6) /
                        std::pow(nd, 2.0 * muc);
    double K1;
    if (std::abs(muc - 0.5) <= 1e-12) {
      K1 = 2.0 * p.sigma2 * p.c * p.c * std::log(nd + 1.0) / nd;
    } else if (muc > 0.5) {
      K1 = std::pow(2.0, 4.0 * muc) * p.c * p.c * p.sigma2 /
           ((2.0 * muc - 1.0) * nd);
    } else {
      K1 = p.sigma2 * std::pow(2.0, 2.0 * muc + 1.0) * p.c * p.c /
           ((1.0 - 2.0 * muc) * std::pow(nd, 2.0 * muc));
    }
    return lead + K1;
  }

  if (!(p.alpha > 0.0 && p.alpha < 1.0))
    throw CaseMismatch("polynomial step case requires alpha in (0,1)");
  const double a_n0 = p.c / std::pow(n0d, p.alpha);
  detail::regime(p.mu1 * a_n0 < 1.0,
                 "mu1*a_n0 < 1, got mu1*a_n0=" + std::to_string(p.mu1 * a_n0));
  const double om = 1.0 - p.alpha;
  const double Cn0 = std::pow(1.0 + p.c * p.c * p.B * p.B, n0d) *
                     std::exp(2.0 * muc * std::pow(n0d, om) / om);
  const double lead = Cn0 * (p.init_err2 + p.sigma2 * p.c * p.c * n0d) *
                      std::exp(-2.0 * muc * std::pow(nd, om) / om);
  const double tail = 2.0 * p.sigma2 * p.c * p.c *
                      std::pow(2.0 * muc, p.alpha / om) /
                      (om * std::pow(nd, p.alpha));
  return lead + tail;
}

// High-probability companion of the polynomial universal-step bound:
//   C2 * exp(-mu1 c n^{1-alpha} / (2(1-alpha))) + C3 / n^{alpha/2}
// with (grouping follows the summation bound
//   sum_k L_k^2 <= (1+c^2 L1^2)^{n0+1}/L1^2
//                  * exp(-mu1 c (n^{1-alpha} - n0^{1-alpha})/(1-alpha)),
// whose n0 factor therefore lives inside C2's square root):
//   C2 = 8 L1 nu sqrt(log(1/delta) (1+c^2L1^2)^{n0+1}
//                     exp(mu1 c n0^{1-alpha}/(1-alpha)) / L1^2)
//        + sqrt(C(n0) (init_err2 + sigma2 c^2 n0))
//   C3 = 8 L1 nu sqrt(log(1/delta) 2 (mu1 c)^{alpha/(1-alpha)} c^2/(1-alpha))
//        + sqrt(sigma2 2 (2 mu1 c)^{alpha/(1-alpha)} c^2/(1-alpha))
// Regime: L1^2 * a_{n0} < mu1, alpha in (0,1), delta in (0,1].
inline double estimator_hp_bound_universal(const BoundParams& p,
                                           std::int64_t n, double delta) {
  detail::require(n >= 1, "bound: n >= 1");
  detail::require(p.c > 0.0, "bound: c > 0");
  detail::require(p.mu1 > 0.0, "bound: mu1 > 0");
  detail::require(p.sigma2 >= 0.0, "bound: sigma2 >= 0");
  detail::require(p.init_err2 >= 0.0, "bound: init_err2 >= 0");
  detail::require(p.B >= 0.0, "bound: B >= 0");
  detail::require(p.L1 > 0.0, "bound: L1 > 0");
  detail::require(p.nu > 0.0, "bound: nu > 0");
  detail::require(p.n0 >= 1, "bound: n0 >= 1");
  detail::require(n >= p.n0, "bound: n >= n0");
  detail::require(delta > 0.0 && delta <= 1.0, "bound: delta in (0,1]");
  if (!(p.alpha > 0.0 && p.alpha < 1.0))
    throw CaseMismatch("universal hp bound requires alpha in (0,1)");
  const double n0d = static_cast<double>(p.n0);
  const double a_n0 = p.c / std::pow(n0d, p.alpha);
  detail::regime(p.L1 * p.L1 * a_n0 < p.mu1,
                 "L1^2*a_n0 < mu1, got L1^2*a_n0=" +
                     std::to_string(p.L1 * p.L1 * a_n0) +
                     " mu1=" + std::to_string(p.mu1));

  const double nd = static_cast<double>(n);
  const double muc = p.mu1 * p.c;
  const double om = 1.0 - p.alpha;
  const double logd = std::log(1.0 / delta);
  const double Cn0 = std::pow(1.0 + p.c * p.c * p.B * p.B, n0d) *
                     std::exp(2.0 * muc * std::pow(n0d, om) / om);
  const double C2 =
      8.0 * p.L1 * p.nu *
          std::sqrt(logd * std::pow(1.0 + p.c * p.c * p.L1 * p.L1, n0d + 1.0) *
                    std::exp(muc * std::pow(n0d, om) / om) / (p.L1 * p.L1)) +
      std::sqrt(Cn0 * (p.init_err2 + p.sigma2 * p.c * p.c * n0d));
  const double C3 =
      8.0 * p.L1 * p.nu *
          std::sqrt(logd * 2.0 * std::pow(muc, p.alpha / om) * p.c * p.c / om) +
      std::sqrt(p.sigma2 * 2.0 * std::pow(2.0 * muc, p.alpha / om) * p.c *
                p.c / om);
  return C2 * std::exp(-muc * std::pow(nd, om) / (2.0 * om)) +
         C3 / std::pow(nd, p.alpha / 2.0);
}

// MSE bound for projected SGD with batched biased gradients, a_k = c/k and
// batch m per iteration. C4 bounds the gradient estimator's mean absolute
// error as C4/sqrt(m), C5 its second moment; both are supplied by the caller
// (fitted empirically -- their closed forms contain an unevaluable universal
// constant). Regime mu2*c > 1/2:
//   3 init_err2 / n^{2 mu2 c} + C6/n + C7/m
//   C6 = 3 C5 2^{2 mu2 c} c^2 / (2 mu2 c - 1)
//   C7 = 3 C4^2 c^2 2^{4 mu2 c} / (mu2 c)^2
inline double optimizer_mse_bound(const BoundParams& p, std::int64_t n,
                                  std::int64_t m, double C4, double C5) {
  detail::require(n >= 1, "bound: n >= 1");
  detail::require(m >= 1, "bound: m >= 1");
  detail::require(p.c > 0.0, "bound: c > 0");
  detail::require(p.mu2 > 0.0, "bound: mu2 > 0");
  detail::require(p.init_err2 >= 0.0, "bound: init_err2 >= 0");
  detail::require(C4 >= 0.0 && C5 >= 0.0, "bound: C4, C5 >= 0");
  const double muc = p.mu2 * p.c;
  detail::regime(muc > 0.5, "mu2*c > 1/2, got mu2*c=" + std::to_string(muc));
  const double nd = static_cast<double>(n);
  const double C6 = 3.0 * C5 * std::pow(2.0, 2.0 * muc) * p.c * p.c /
                    (2.0 * muc - 1.0);
  const double C7 = 3.0 * C4 * C4 * p.c * p.c * std::pow(2.0, 4.0 * muc) /
                    (muc * muc);
  return 3.0 * p.init_err2 / std::pow(nd, 2.0 * muc) + C6 / nd +
         C7 / static_cast<double>(m);
}

}  // namespace shortfall
