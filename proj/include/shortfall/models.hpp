#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "shortfall/errors.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/rng.hpp"

namespace shortfall {

// Sample models for the loss variable xi = -X.
//   GaussianLoss(mean, stddev):            xi ~ N(mean, stddev^2)
//   TruncatedGaussianLoss(mean, stddev, clip):
//       xi = clamp(N(mean, stddev^2), mean -/+ clip*stddev)
//   TwoAssetPortfolio(m1, m2, s1, s2, [theta_lo, theta_hi]):
//       X(theta) = theta*Y1 + (1-theta)*Y2, Y_i ~ N(m_i, s_i^2) independent,
//       xi = -X, pathwise sensitivity xi' = -(Y1 - Y2) under common random
//       numbers.
enum class ModelKind { GaussianLoss, TruncatedGaussianLoss, TwoAssetPortfolio };

struct ModelSpec {
  ModelKind kind = ModelKind::GaussianLoss;
  // GaussianLoss / TruncatedGaussianLoss
  double mean = 0.0;
  double stddev = 1.0;
  double clip = 0.0;  // truncation half-width in stddev units
  // TwoAssetPortfolio
  double m1 = 0.0, m2 = 0.0;
  double s1 = 1.0, s2 = 1.0;
  double theta_lo = 0.0, theta_hi = 1.0;
};

inline ModelSpec gaussian_loss_model(double mean, double stddev) {
  if (!(stddev > 0.0)) throw ConfigError("gaussian model requires stddev > 0");
  ModelSpec m;
  m.kind = ModelKind::GaussianLoss;
  m.mean = mean;
  m.stddev = stddev;
  return m;
}

inline ModelSpec truncated_gaussian_loss_model(double mean, double stddev,
                                               double clip) {
  if (!(stddev > 0.0) || !(clip > 0.0))
    throw ConfigError("truncated gaussian model requires stddev > 0, clip > 0");
  ModelSpec m;
  m.kind = ModelKind::TruncatedGaussianLoss;
  m.mean = mean;
  m.stddev = stddev;
  m.clip = clip;
  return m;
}

inline ModelSpec two_asset_model(double m1, double m2, double s1, double s2,
                                 double theta_lo = 0.0, double theta_hi = 1.0) {
  if (!(s1 > 0.0) || !(s2 > 0.0))
    throw ConfigError("two-asset model requires s1 > 0, s2 > 0");
  if (!(theta_lo < theta_hi))
    throw ConfigError("two-asset model requires theta_lo < theta_hi");
  ModelSpec m;
  m.kind = ModelKind::TwoAssetPortfolio;
  m.m1 = m1;
  m.m2 = m2;
  m.s1 = s1;
  m.s2 = s2;
  m.theta_lo = theta_lo;
  m.theta_hi = theta_hi;
  return m;
}

struct XiSample {
  double xi;
  double xi_prime;
};

inline void require_theta(const ModelSpec& m, double theta) {
  if (!(theta >= m.theta_lo && theta <= m.theta_hi))
    throw ThetaOutOfDomain("theta=" + std::to_string(theta) +
                           " outside [" + std::to_string(m.theta_lo) + ", " +
                           std::to_string(m.theta_hi) + "]");
}

// One xi draw for the non-parameterized models. Consumes exactly 2 rng words.
inline double draw(const ModelSpec& m, RngStream& rng) {
  switch (m.kind) {
    case ModelKind::GaussianLoss:
      return m.mean + m.stddev * rng.normal();
    case ModelKind::TruncatedGaussianLoss: {
      const double raw = m.mean + m.stddev * rng.normal();
      return std::clamp(raw, m.mean - m.clip * m.stddev,
                        m.mean + m.clip * m.stddev);
    }
    case ModelKind::TwoAssetPortfolio:
      throw WrongKind("draw: two-asset model needs theta; use "
                      "draw_with_sensitivity");
  }
  throw ConfigError("draw: unknown model kind");
}

// One (xi, xi') pair under common random numbers. Consumes exactly 2 rng
// words (both Box-Muller branches of a single polar draw).
inline XiSample draw_with_sensitivity(const ModelSpec& m, double theta,
                                      RngStream& rng) {
  if (m.kind != ModelKind::TwoAssetPortfolio)
    throw WrongKind("draw_with_sensitivity: requires the two-asset model");
  require_theta(m, theta);
  const auto [z1, z2] = rng.normal_pair();
  const double y1 = m.m1 + m.s1 * z1;
  const double y2 = m.m2 + m.s2 * z2;
  return {-(theta * y1 + (1.0 - theta) * y2), -(y1 - y2)};
}

// xi draw that works for every kind; theta is only consulted for the
// portfolio. All kinds consume 2 rng words per draw.
inline double draw_xi(const ModelSpec& m, std::optional<double> theta,
                      RngStream& rng) {
  if (m.kind == ModelKind::TwoAssetPortfolio) {
    if (!theta)
      throw WrongKind("draw_xi: two-asset model needs theta");
    return draw_with_sensitivity(m, *theta, rng).xi;
  }
  return draw(m, rng);
}

// E[xi]; exact for all kinds (symmetric truncation preserves the mean).
inline double xi_mean(const ModelSpec& m, std::optional<double> theta = {}) {
  switch (m.kind) {
    case ModelKind::GaussianLoss:
    case ModelKind::TruncatedGaussianLoss:
      return m.mean;
    case ModelKind::TwoAssetPortfolio: {
      if (!theta) throw WrongKind("xi_mean: two-asset model needs theta");
      require_theta(m, *theta);
      return -(*theta * m.m1 + (1.0 - *theta) * m.m2);
    }
  }
  throw ConfigError("xi_mean: unknown model kind");
}

// Var(xi) where xi is exactly Gaussian; absent for the truncated model.
inline std::optional<double> xi_gaussian_variance(
    const ModelSpec& m, std::optional<double> theta = {}) {
  switch (m.kind) {
    case ModelKind::GaussianLoss:
      return m.stddev * m.stddev;
    case ModelKind::TruncatedGaussianLoss:
      return std::nullopt;
    case ModelKind::TwoAssetPortfolio: {
      if (!theta) throw WrongKind("xi_gaussian_variance: needs theta");
      require_theta(m, *theta);
      const double a = *theta, b = 1.0 - *theta;
      return a * a * m.s1 * m.s1 + b * b * m.s2 * m.s2;
    }
  }
  throw ConfigError("xi_gaussian_variance: unknown model kind");
}

// Var(xi) for every kind; the clamped Gaussian has a closed form via erfc.
inline double xi_variance_exact(const ModelSpec& m,
                                std::optional<double> theta = {}) {
  if (m.kind == ModelKind::TruncatedGaussianLoss) {
    const double k = m.clip;
    const double phi_k = std::exp(-0.5 * k * k) / std::sqrt(2.0 * 3.14159265358979323846);
    const double tail = 0.5 * std::erfc(k / std::sqrt(2.0));  // P(Z > k)
    // E[clamp(Z,-k,k)^2] = \int_{-k}^{k} z^2 phi + 2 k^2 P(Z > k)
    const double core = (1.0 - 2.0 * tail) - 2.0 * k * phi_k;
    return (core + 2.0 * k * k * tail) * m.stddev * m.stddev;
  }
  return *xi_gaussian_variance(m, theta);
}

// Root t* of E[l(xi - t)] = lambda, where available in closed form:
//   Identity loss:     t* = E[xi] - lambda                    (all kinds)
//   Exponential loss:  t* = m_xi + beta*s_xi^2/2 - ln(lambda)/beta
//                      (exactly-Gaussian xi only)
inline std::optional<double> closed_form_sr(const ModelSpec& m,
                                            const LossSpec& l, double lambda,
                                            std::optional<double> theta = {}) {
  switch (l.kind) {
    case LossKind::Identity:
      return xi_mean(m, theta) - lambda;
    case LossKind::Exponential: {
      const auto s2 = xi_gaussian_variance(m, theta);
      if (!s2) return std::nullopt;
      if (!(lambda > 0.0))
        throw ConfigError("closed_form_sr: exponential loss needs lambda > 0");
      return xi_mean(m, theta) + l.beta * *s2 / 2.0 -
             std::log(lambda) / l.beta;
    }
    case LossKind::PiecewisePolynomial:
      return std::nullopt;
  }
  throw ConfigError("closed_form_sr: unknown loss kind");
}

// d/dtheta of the closed-form risk for the two-asset model.
inline std::optional<double> closed_form_sr_derivative(const ModelSpec& m,
                                                       const LossSpec& l,
                                                       double lambda,
                                                       double theta) {
  if (m.kind != ModelKind::TwoAssetPortfolio)
    throw WrongKind("closed_form_sr_derivative: requires the two-asset model");
  require_theta(m, theta);
  (void)lambda;
  switch (l.kind) {
    case LossKind::Identity:
      return -(m.m1 - m.m2);
    case LossKind::Exponential:
      return -(m.m1 - m.m2) +
             l.beta * (theta * m.s1 * m.s1 - (1.0 - theta) * m.s2 * m.s2);
    case LossKind::PiecewisePolynomial:
      return std::nullopt;
  }
  throw ConfigError("closed_form_sr_derivative: unknown loss kind");
}

// argmin over [theta_lo, theta_hi] of the closed-form risk; exponential loss
// clamps the quadratic's vertex, identity loss sits on a boundary.
inline std::optional<double> closed_form_theta_star(const ModelSpec& m,
                                                    const LossSpec& l) {
  if (m.kind != ModelKind::TwoAssetPortfolio)
    throw WrongKind("closed_form_theta_star: requires the two-asset model");
  switch (l.kind) {
    case LossKind::Exponential: {
      const double vertex = ((m.m1 - m.m2) / l.beta + m.s2 * m.s2) /
                            (m.s1 * m.s1 + m.s2 * m.s2);
      return std::clamp(vertex, m.theta_lo, m.theta_hi);
    }
    case LossKind::Identity: {
      if (m.m1 == m.m2) return std::nullopt;  // risk is flat in theta
      return m.m1 > m.m2 ? m.theta_hi : m.theta_lo;
    }
    case LossKind::PiecewisePolynomial:
      return std::nullopt;
  }
  throw ConfigError("closed_form_theta_star: unknown loss kind");
}

// Curvature of the closed-form risk in theta (constant for these models);
// used to place the optimizer step size. Exponential loss only.
inline std::optional<double> closed_form_sr_curvature(const ModelSpec& m,
                                                      const LossSpec& l) {
  if (m.kind != ModelKind::TwoAssetPortfolio)
    throw WrongKind("closed_form_sr_curvature: requires the two-asset model");
  if (l.kind != LossKind::Exponential) return std::nullopt;
  return l.beta * (m.s1 * m.s1 + m.s2 * m.s2);
}

inline std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::GaussianLoss: return "gaussian_loss";
    case ModelKind::TruncatedGaussianLoss: return "truncated_gaussian_loss";
    case ModelKind::TwoAssetPortfolio: return "two_asset";
  }
  return "?";
}

}  // namespace shortfall
