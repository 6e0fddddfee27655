#pragma once

#include <cmath>
#include <string>

#include "shortfall/errors.hpp"

namespace shortfall {

// Loss menu. All are nondecreasing and convex on R:
//   Identity:             l(x) = x                      (analytic oracles only)
//   Exponential(beta):    l(x) = exp(beta*x)            (entropic risk)
//   PiecewisePolynomial:  l(x) = max(x - threshold, 0)^degree / degree
enum class LossKind { Identity, Exponential, PiecewisePolynomial };

struct LossSpec {
  LossKind kind = LossKind::Identity;
  double beta = 1.0;       // Exponential only
  double threshold = 0.0;  // PiecewisePolynomial only
  int degree = 2;          // PiecewisePolynomial only, integer >= 1
};

inline LossSpec identity_loss() { return {LossKind::Identity, 1.0, 0.0, 2}; }

inline LossSpec exponential_loss(double beta) {
  if (!(beta > 0.0)) throw ConfigError("exponential loss requires beta > 0");
  return {LossKind::Exponential, beta, 0.0, 2};
}

inline LossSpec piecewise_polynomial_loss(double threshold, int degree) {
  if (degree < 1)
    throw ConfigError("piecewise polynomial loss requires degree >= 1");
  return {LossKind::PiecewisePolynomial, 1.0, threshold, degree};
}

namespace detail {
inline double checked_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainOverflow(what);
  return v;
}
}  // namespace detail

inline double loss_eval(const LossSpec& l, double x) {
  switch (l.kind) {
    case LossKind::Identity:
      return x;
    case LossKind::Exponential:
      return detail::checked_finite(std::exp(l.beta * x),
                                    "loss_eval: exp overflow");
    case LossKind::PiecewisePolynomial: {
      const double u = x - l.threshold;
      if (u <= 0.0) return 0.0;
      return detail::checked_finite(std::pow(u, l.degree) / l.degree,
                                    "loss_eval: pow overflow");
    }
  }
  throw ConfigError("loss_eval: unknown loss kind");
}

inline double loss_deriv1(const LossSpec& l, double x) {
  switch (l.kind) {
    case LossKind::Identity:
      return 1.0;
    case LossKind::Exponential:
      return detail::checked_finite(l.beta * std::exp(l.beta * x),
                                    "loss_deriv1: exp overflow");
    case LossKind::PiecewisePolynomial: {
      const double u = x - l.threshold;
      if (u <= 0.0) return 0.0;
      if (l.degree == 1) return 1.0;
      return detail::checked_finite(std::pow(u, l.degree - 1),
                                    "loss_deriv1: pow overflow");
    }
  }
  throw ConfigError("loss_deriv1: unknown loss kind");
}

// Second derivative; at the piecewise kink the (right) one-sided value is
// returned, except degree 1 where the first derivative itself jumps.
inline double loss_deriv2(const LossSpec& l, double x) {
  switch (l.kind) {
    case LossKind::Identity:
      return 0.0;
    case LossKind::Exponential:
      return detail::checked_finite(l.beta * l.beta * std::exp(l.beta * x),
                                    "loss_deriv2: exp overflow");
    case LossKind::PiecewisePolynomial: {
      const double u = x - l.threshold;
      if (l.degree == 1) {
        if (u == 0.0)
          throw NotDifferentiable(
              "loss_deriv2: degree-1 piecewise loss has a kink at the "
              "threshold");
        return 0.0;
      }
      if (u < 0.0) return 0.0;
      if (l.degree == 2) return 1.0;  // one-sided value at u == 0 is 0 anyway
      return detail::checked_finite(
          (l.degree - 1) * std::pow(u, l.degree - 2),
          "loss_deriv2: pow overflow");
    }
  }
  throw ConfigError("loss_deriv2: unknown loss kind");
}

// Derivative envelopes of l on [lo, hi]; all three losses have monotone l',
// so the envelopes sit at the endpoints.
struct LossConstants {
  double L1;  // sup l'
  double L2;  // sup l''
  double eta; // inf l'  (> 0 or constants_on throws)
  double lo;
  double hi;
};

// inf l' on [lo, hi], without the positivity requirement. Used by the
// gradient denominator guard, which must see eta == 0 rather than a throw.
inline double loss_eta_infimum(const LossSpec& l, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("loss interval requires lo < hi");
  switch (l.kind) {
    case LossKind::Identity:
      return 1.0;
    case LossKind::Exponential:
      return l.beta * std::exp(l.beta * lo);
    case LossKind::PiecewisePolynomial:
      return loss_deriv1(l, lo);
  }
  throw ConfigError("loss_eta_infimum: unknown loss kind");
}

inline LossConstants constants_on(const LossSpec& l, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("constants_on requires lo < hi");
  LossConstants out{0.0, 0.0, 0.0, lo, hi};
  switch (l.kind) {
    case LossKind::Identity:
      out = {1.0, 0.0, 1.0, lo, hi};
      break;
    case LossKind::Exponential:
      out.L1 = loss_deriv1(l, hi);
      out.eta = loss_deriv1(l, lo);
      out.L2 = loss_deriv2(l, hi);
      break;
    case LossKind::PiecewisePolynomial: {
      out.L1 = loss_deriv1(l, hi);
      out.eta = loss_deriv1(l, lo);
      if (l.degree == 1) {
        out.L2 = 0.0;
      } else if (hi <= l.threshold) {
        out.L2 = 0.0;
      } else if (l.degree == 2) {
        out.L2 = 1.0;
      } else {
        out.L2 = loss_deriv2(l, hi);
      }
      break;
    }
  }
  if (!(out.eta > 0.0))
    throw EtaNonpositive("constants_on: inf l' <= 0 on [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return out;
}

inline std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::Identity: return "identity";
    case LossKind::Exponential: return "exponential";
    case LossKind::PiecewisePolynomial: return "piecewise_polynomial";
  }
  return "?";
}

}  // namespace shortfall
