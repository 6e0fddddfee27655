#include <cmath>
#include <cstddef>
#include <vector>

#include <doctest.h>

#include "shortfall/bounds.hpp"
#include "shortfall/calibration.hpp"
#include "shortfall/errors.hpp"
#include "shortfall/estimator.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/rng.hpp"

using namespace shortfall;

TEST_CASE("single-sample g estimate") {
  CHECK(g_hat(identity_loss(), 0.3, 0.0, 0.0) == -0.3);
  CHECK(g_hat(exponential_loss(2.0), 1.0, 0.7, 0.7) == 0.0);
  CHECK(g_hat(exponential_loss(1.0), 1.0, 1.0, 0.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("projection onto the bracket") {
  CHECK(project(3.0, -1.0, 2.0) == 2.0);
  CHECK(project(-5.0, -1.0, 2.0) == -1.0);
  CHECK(project(0.5, -1.0, 2.0) == 0.5);
  CHECK_THROWS_AS((void)project(0.0, 2.0, 2.0), ConfigError);
}

TEST_CASE("step-size schedule") {
  CHECK(step_size({2.0, 1.0}, 4) == 0.5);
  CHECK(step_size({1.0, 0.5}, 4) == 0.5);
  CHECK(step_size({0.75, 1.0}, 1) == 0.75);
}

TEST_CASE("one projected stochastic-approximation step") {
  EstimatorConfig wide(identity_loss(), 0.0, {-10.0, 10.0}, {1.0, 1.0});
  const EstimatorState s1 = sa_step({0.0, 0}, wide, 2.0);
  CHECK(s1.t == 2.0);
  CHECK(s1.k == 1);

  EstimatorConfig narrow(identity_loss(), 0.0, {-1.0, 1.0}, {1.0, 1.0});
  CHECK(sa_step({0.0, 0}, narrow, 2.0).t == 1.0);

  // zero noisy g: iterate unchanged
  CHECK(sa_step({0.0, 0}, wide, 0.0).t == 0.0);
}

TEST_CASE("estimator config validation") {
  CHECK_THROWS_AS(
      EstimatorConfig(identity_loss(), 0.0, {1.0, -1.0}, {1.0, 1.0})
          .validate(),
      ConfigError);
  CHECK_THROWS_AS(
      EstimatorConfig(identity_loss(), 0.0, {-1.0, 1.0}, {1.0, 1.0}, 3.0)
          .validate(),
      ConfigError);
  CHECK_THROWS_AS(
      EstimatorConfig(identity_loss(), 0.0, {-1.0, 1.0}, {0.0, 1.0})
          .validate(),
      ConfigError);
  CHECK_THROWS_AS(
      EstimatorConfig(identity_loss(), 0.0, {-1.0, 1.0}, {1.0, 1.5})
          .validate(),
      ConfigError);
}

TEST_CASE("degenerate model: recursion converges monotonically to the root") {
  const ModelSpec m = truncated_gaussian_loss_model(1.0, 1e-12, 1.0);
  EstimatorConfig ec(identity_loss(), 0.0, {-5.0, 5.0}, {1.0, 1.0}, 0.0);
  RngStream rng(7, 3);
  const EstimateResult r = estimate(m, ec, 1000, rng, 1);
  CHECK(std::abs(r.final_t - 1.0) <= 1e-2);
  for (std::size_t i = 1; i < r.trajectory.size(); ++i)
    CHECK(r.trajectory[i].t >= r.trajectory[i - 1].t - 1e-12);
  CHECK(r.draws == 1000);

  // brute-force replay of t_k = t_{k-1} + (1/k)(xi_k - t_{k-1}) on the same
  // stream reproduces the estimator bit for bit
  RngStream rng2(7, 3);
  double t = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double xi = draw(m, rng2);
    t = project(t + (1.0 / k) * (xi - t), -5.0, 5.0);
  }
  CHECK(t == r.final_t);
}

TEST_CASE("trajectory recording policies") {
  const ModelSpec m = gaussian_loss_model(0.0, 1.0);
  EstimatorConfig ec(exponential_loss(1.0), 1.0, {-2.0, 3.0}, {1.0, 1.0});
  RngStream rng(1, 0);
  const EstimateResult every10 = estimate(m, ec, 100, rng, 10);
  REQUIRE(every10.trajectory.size() == 10);
  CHECK(every10.trajectory.front().k == 10);
  CHECK(every10.trajectory.back().k == 100);

  RngStream rng2(1, 0);
  const EstimateResult geo = estimate(m, ec, 1000, rng2, 0);
  CHECK(geo.trajectory.back().k == 1000);
  CHECK(geo.trajectory.size() < 40);
  for (std::size_t i = 1; i < geo.trajectory.size(); ++i)
    CHECK(geo.trajectory[i].k > geo.trajectory[i - 1].k);
}

TEST_CASE("estimate requires the scalar kinds and theta routing") {
  const ModelSpec port = two_asset_model(0.5, 0.0, 1.0, 1.0);
  EstimatorConfig ec(exponential_loss(1.0), 1.0, {-2.0, 3.0}, {1.0, 1.0});
  RngStream rng(2, 0);
  CHECK_THROWS_AS((void)estimate(port, ec, 10, rng), WrongKind);
  CHECK_THROWS_AS(
      (void)estimate_at_theta(gaussian_loss_model(0.0, 1.0), 0.5, ec, 10, rng),
      WrongKind);
  const EstimateResult r = estimate_at_theta(port, 0.5, ec, 500, rng);
  CHECK(r.final_t > -2.0);
  CHECK(r.final_t < 3.0);
}

TEST_CASE("endpoint warning fires when the bracket misses the root") {
  const ModelSpec m = gaussian_loss_model(0.0, 1.0);
  EstimatorConfig ec(exponential_loss(1.0), 1.0, {10.0, 20.0}, {1.0, 1.0});
  RngStream rng(3, 0);
  const EstimateResult r = estimate(m, ec, 200, rng);
  CHECK(r.endpoint_warning);
  CHECK(r.final_t == 10.0);  // g < 0 everywhere above the root
}

TEST_CASE("sample-average bisection on tiny fixed samples") {
  const Bracket br{-5.0, 5.0};
  const std::vector<double> ones{1.0, 1.0, 1.0};
  CHECK(saa_binary_search(ones, identity_loss(), 0.0, br) ==
        doctest::Approx(1.0).epsilon(1e-6));
  const std::vector<double> two{0.0, 2.0};
  CHECK(saa_binary_search(two, identity_loss(), 0.0, br) ==
        doctest::Approx(1.0).epsilon(1e-6));
  const std::vector<double> zeros{0.0, 0.0, 0.0, 0.0};
  CHECK(saa_binary_search(zeros, exponential_loss(1.0), 1.0, {-3.0, 3.0}) ==
        doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("bisection requires an empirical sign change") {
  const std::vector<double> xs{5.0, 5.0};
  CHECK_THROWS_AS(
      (void)saa_binary_search(xs, identity_loss(), 0.0, {10.0, 20.0}),
      NoSignChange);
}

TEST_CASE("empirical g is nonincreasing in t") {
  std::vector<double> xs;
  RngStream rng(8, 1);
  for (int i = 0; i < 500; ++i) xs.push_back(rng.normal());
  double prev = detail::empirical_g(xs, exponential_loss(1.0), 1.0, -3.0);
  for (double t = -2.5; t <= 3.0; t += 0.5) {
    const double g = detail::empirical_g(xs, exponential_loss(1.0), 1.0, t);
    CHECK(g <= prev + 1e-12);
    prev = g;
  }
}

TEST_CASE("bracket search straddles the known roots") {
  const ModelSpec g01 = gaussian_loss_model(0.0, 1.0);
  RngStream r1(6, 0), r2(6, 1), r3(6, 2);
  const Bracket b1 = bracket_search(g01, exponential_loss(1.0), 1.0, 10000, r1);
  CHECK(b1.lo < 0.5);
  CHECK(b1.hi > 0.5);

  const ModelSpec unit = truncated_gaussian_loss_model(1.0, 1e-12, 1.0);
  const Bracket b2 = bracket_search(unit, identity_loss(), 0.0, 10000, r2);
  CHECK(b2.lo < 1.0);
  CHECK(b2.hi > 1.0);

  const ModelSpec port = two_asset_model(0.5, 0.0, 1.0, 1.0);
  const Bracket b3 =
      bracket_search(port, exponential_loss(1.0), 1.0, 10000, r3, 0.5);
  CHECK(b3.lo < 0.0);
  CHECK(b3.hi > 0.0);
}

TEST_CASE("recursive and sample-average estimates agree on shared samples") {
  const ModelSpec m = gaussian_loss_model(0.0, 1.0);
  const LossSpec l = exponential_loss(1.0);
  const double lambda = 1.0;
  const Bracket br{-2.0, 3.0};
  const std::int64_t n = 10000;

  std::vector<double> xis(n);
  RngStream rng(13, 0);
  for (auto& x : xis) x = draw(m, rng);

  const double saa = saa_binary_search(xis, l, lambda, br);

  RngStream mc(13, 1);
  const BracketCalibration cal = calibrate_on_bracket(m, l, lambda, br, {}, mc);
  EstimatorConfig ec(l, lambda, br, {0.75 / cal.mu1, 1.0});
  std::size_t idx = 0;
  const EstimateResult sa =
      estimate_with([&] { return xis[idx++]; }, ec, n, n);

  BoundParams bp;
  bp.mu1 = cal.mu1;
  bp.c = 0.75 / cal.mu1;
  bp.alpha = 1.0;
  bp.sigma2 = cal.sigma2;
  bp.init_err2 = (ec.t0 - 0.5) * (ec.t0 - 0.5);
  CHECK(std::abs(sa.final_t - saa) <=
        5.0 * std::sqrt(estimator_mse_bound_tuned(bp, n)));
}
