#include <cmath>
#include <vector>

#include <doctest.h>

#include "shortfall/errors.hpp"
#include "shortfall/estimator.hpp"
#include "shortfall/gradient.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/rates.hpp"
#include "shortfall/rng.hpp"

using namespace shortfall;

namespace {
EstimatorConfig portfolio_estimator() {
  // xi(0.5) ~ N(-0.25, 0.5); tuned harmonic steps for the inner root phase
  const double mu1 = std::exp(-0.25 - 3.0 + 0.25);
  return EstimatorConfig(exponential_loss(1.0), 1.0, {-2.0, 3.0},
                         {0.75 / mu1, 1.0});
}
}  // namespace

TEST_CASE("identical assets give a vanishing gradient") {
  const ModelSpec m = two_asset_model(1.0, 1.0, 1e-12, 1e-12);
  EstimatorConfig ec(exponential_loss(1.0), 1.0, {-3.0, 1.0}, {1.0, 1.0});
  RngStream rng(1, 0);
  const GradientEstimate g = estimate_gradient(m, 0.5, 64, ec, rng);
  CHECK(std::abs(g.value) <= 1e-9);
  CHECK(g.draws == 128);
  CHECK(g.m == 64);
}

TEST_CASE("gradient ratio identity holds to machine precision") {
  const ModelSpec m = two_asset_model(0.5, 0.0, 1.0, 1.0);
  RngStream rng(2, 0);
  const GradientEstimate g =
      estimate_gradient(m, 0.5, 1000, portfolio_estimator(), rng);
  CHECK(g.value * g.b_m == doctest::Approx(g.a_m).epsilon(1e-13));
  CHECK(g.t_m >= -2.0);
  CHECK(g.t_m <= 3.0);
}

TEST_CASE("gradient mean matches the oracle and its finite difference") {
  const ModelSpec m = two_asset_model(0.5, 0.0, 1.0, 1.0);
  const LossSpec l = exponential_loss(1.0);
  const int R = 100;
  const std::int64_t batch = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < R; ++r) {
    RngStream rng(3, static_cast<std::uint64_t>(r));
    const GradientEstimate g =
        estimate_gradient(m, 0.5, batch, portfolio_estimator(), rng);
    sum += g.value;
    sum2 += g.value * g.value;
  }
  const double mean = sum / R;
  const double se = std::sqrt((sum2 - R * mean * mean) / (R - 1) / R);
  CHECK(std::abs(mean - (-0.5)) <= 3.0 * se);

  const double d = 1e-4;
  const double fd = (*closed_form_sr(m, l, 1.0, 0.5 + d) -
                     *closed_form_sr(m, l, 1.0, 0.5 - d)) /
                    (2.0 * d);
  CHECK(std::abs(mean - fd) <= 3.0 * se);
}

TEST_CASE("mean absolute gradient error decays like the square root") {
  const ModelSpec m = two_asset_model(0.5, 0.0, 1.0, 1.0);
  const std::int64_t grid[] = {100, 1000, 10000};
  const int R = 50;
  std::vector<RatePoint> pts;
  for (std::size_t gi = 0; gi < 3; ++gi) {
    double acc = 0.0;
    for (int r = 0; r < R; ++r) {
      RngStream rng(4, (static_cast<std::uint64_t>(gi) << 32) |
                           static_cast<std::uint64_t>(r));
      const GradientEstimate g =
          estimate_gradient(m, 0.5, grid[gi], portfolio_estimator(), rng);
      acc += std::abs(g.value - (-0.5));
    }
    pts.push_back({static_cast<double>(grid[gi]), acc / R});
  }
  const RateFit fit = fit_rate(pts);
  CHECK(fit.slope >= -0.65);
  CHECK(fit.slope <= -0.35);
}

TEST_CASE("denominator guard fires when the loss is flat at the samples") {
  const ModelSpec m = two_asset_model(10.0, 10.0, 1e-3, 1e-3);
  EstimatorConfig ec(piecewise_polynomial_loss(0.0, 2), 0.5, {1.0, 2.0},
                     {1.0, 1.0});
  RngStream rng(5, 0);
  CHECK_THROWS_AS((void)estimate_gradient(m, 0.5, 256, ec, rng), BmBelowEta);
}

TEST_CASE("gradient input validation") {
  const ModelSpec m = two_asset_model(0.5, 0.0, 1.0, 1.0);
  RngStream rng(6, 0);
  CHECK_THROWS_AS(
      (void)estimate_gradient(m, 0.5, 0, portfolio_estimator(), rng),
      ConfigError);
  CHECK_THROWS_AS((void)estimate_gradient(gaussian_loss_model(0.0, 1.0), 0.5,
                                          10, portfolio_estimator(), rng),
                  WrongKind);
  CHECK_THROWS_AS(
      (void)estimate_gradient(m, 1.5, 10, portfolio_estimator(), rng),
      ThetaOutOfDomain);
}
