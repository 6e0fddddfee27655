#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "shortfall/errors.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/rng.hpp"

using namespace shortfall;

TEST_CASE("rng streams are deterministic and decoupled") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t x = a.next_u64();
    all_equal = all_equal && (x == b.next_u64());
    any_diff = any_diff || (x != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("skip is equivalent to drawing and discarding") {
  RngStream a(11, 3), b(11, 3);
  for (int i = 0; i < 5; ++i) (void)a.next_u64();
  b.skip(5);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform01 lies in (0, 1]") {
  RngStream r(9, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("degenerate truncated model draws its mean") {
  const ModelSpec m = truncated_gaussian_loss_model(5.0, 1e-12, 1.0);
  RngStream r(1, 0);
  for (int i = 0; i < 100; ++i)
    CHECK(std::abs(draw(m, r) - 5.0) <= 1e-9);
}

TEST_CASE("standard gaussian sample mean at a million draws") {
  const ModelSpec m = gaussian_loss_model(0.0, 1.0);
  RngStream r(42, 0);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += draw(m, r);
  CHECK(std::abs(sum / n) <= 0.004);
}

TEST_CASE("truncation clamps every draw") {
  const ModelSpec m = truncated_gaussian_loss_model(0.0, 1.0, 2.0);
  RngStream r(3, 5);
  for (int i = 0; i < 20000; ++i) {
    const double x = draw(m, r);
    CHECK(x >= -2.0);
    CHECK(x <= 2.0);
  }
}

TEST_CASE("degenerate portfolio has unit xi and zero sensitivity") {
  const ModelSpec m = two_asset_model(1.0, 1.0, 1e-12, 1e-12);
  RngStream r(4, 0);
  for (int i = 0; i < 100; ++i) {
    const XiSample s = draw_with_sensitivity(m, 0.3, r);
    CHECK(std::abs(s.xi - (-1.0)) <= 1e-9);
    CHECK(std::abs(s.xi_prime) <= 1e-9);
  }
}

TEST_CASE("portfolio xi mean matches the mixture") {
  const ModelSpec m = two_asset_model(0.5, 0.0, 1.0, 1.0);
  RngStream r(42, 1);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += draw_xi(m, 0.5, r);
  CHECK(std::abs(sum / n - (-0.25)) <= 0.004);
  CHECK(xi_mean(m, 0.5) == -0.25);
}

TEST_CASE("theta outside the domain is rejected") {
  const ModelSpec m = two_asset_model(0.5, 0.0, 1.0, 1.0, 0.0, 1.0);
  RngStream r(1, 1);
  CHECK_THROWS_AS((void)draw_with_sensitivity(m, 1.5, r), ThetaOutOfDomain);
  CHECK_THROWS_AS((void)xi_mean(m, -0.1), ThetaOutOfDomain);
}

TEST_CASE("model factories validate parameters") {
  CHECK_THROWS_AS((void)gaussian_loss_model(0.0, 0.0), ConfigError);
  CHECK_THROWS_AS((void)truncated_gaussian_loss_model(0.0, 1.0, 0.0),
                  ConfigError);
  CHECK_THROWS_AS((void)two_asset_model(0.0, 0.0, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS((void)two_asset_model(0.0, 0.0, 1.0, 1.0, 1.0, 0.0),
                  ConfigError);
}

// Composite Simpson over mean +/- 12 sd; plenty for e^{x} tails here.
namespace {
double quadrature_expected_loss(const LossSpec& l, double mean, double sd,
                                double t) {
  const double lo = mean - 12.0 * sd, hi = mean + 12.0 * sd;
  const int steps = 20000;  // even
  const double h = (hi - lo) / steps;
  double acc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * h;
    const double pdf = std::exp(-0.5 * (x - mean) * (x - mean) / (sd * sd)) /
                       (sd * std::sqrt(2.0 * 3.14159265358979323846));
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * loss_eval(l, x - t) * pdf;
  }
  return acc * h / 3.0;
}
}  // namespace

TEST_CASE("closed-form roots with quadrature cross-checks") {
  const ModelSpec g01 = gaussian_loss_model(0.0, 1.0);
  const double t1 = *closed_form_sr(g01, exponential_loss(1.0), 1.0);
  CHECK(t1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(quadrature_expected_loss(exponential_loss(1.0), 0.0, 1.0, t1) ==
        doctest::Approx(1.0).epsilon(1e-6));

  const ModelSpec g23 = gaussian_loss_model(2.0, 3.0);
  const double t2 = *closed_form_sr(g23, identity_loss(), 0.0);
  CHECK(t2 == 2.0);
  CHECK(quadrature_expected_loss(identity_loss(), 2.0, 3.0, t2) ==
        doctest::Approx(0.0).epsilon(1e-6));

  const ModelSpec port = two_asset_model(0.5, 0.0, 1.0, 1.0);
  const double t3 = *closed_form_sr(port, exponential_loss(1.0), 1.0, 0.5);
  CHECK(t3 == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("monte carlo validates the root at a million draws") {
  const ModelSpec m = truncated_gaussian_loss_model(0.5, 1.0, 2.5);
  const LossSpec l = identity_loss();
  const double lambda = 0.25;
  const double t = *closed_form_sr(m, l, lambda);
  RngStream r(17, 2);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = loss_eval(l, draw(m, r) - t);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = (sum2 - n * mean * mean) / (n - 1);
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean - lambda) <= 3.0 * se);
}

TEST_CASE("closed form availability tracks the loss/model pair") {
  const ModelSpec trunc = truncated_gaussian_loss_model(0.0, 1.0, 2.0);
  CHECK(!closed_form_sr(trunc, exponential_loss(1.0), 1.0).has_value());
  CHECK(closed_form_sr(trunc, identity_loss(), 1.0).has_value());
  CHECK(!closed_form_sr(gaussian_loss_model(0.0, 1.0),
                        piecewise_polynomial_loss(0.0, 2), 1.0)
             .has_value());
  CHECK_THROWS_AS((void)closed_form_sr(gaussian_loss_model(0.0, 1.0),
                                       exponential_loss(1.0), 0.0),
                  ConfigError);
}

TEST_CASE("portfolio risk derivative closed forms") {
  const ModelSpec port = two_asset_model(0.5, 0.0, 1.0, 1.0);
  const LossSpec el = exponential_loss(1.0);
  CHECK(*closed_form_sr_derivative(port, el, 1.0, 0.5) == -0.5);
  CHECK(std::abs(*closed_form_sr_derivative(port, el, 1.0, 0.75)) <= 1e-15);
  const ModelSpec flat = two_asset_model(1.0, 1.0, 1.0, 1.0);
  CHECK(*closed_form_sr_derivative(flat, identity_loss(), 1.0, 0.3) == 0.0);
  CHECK(*closed_form_theta_star(port, el) == 0.75);
  CHECK(*closed_form_sr_curvature(port, el) == 2.0);
}

TEST_CASE("cash added to the position shifts the risk down exactly") {
  // cash lowers every loss outcome by the same amount, so the risk drops by
  // exactly that amount (dyadic values keep the float arithmetic exact)
  const double cash = 1.5;
  const double base =
      *closed_form_sr(gaussian_loss_model(0.25, 1.5), identity_loss(), 0.5);
  const double shifted = *closed_form_sr(gaussian_loss_model(0.25 - cash, 1.5),
                                         identity_loss(), 0.5);
  CHECK(shifted == base - cash);
  const double base_e = *closed_form_sr(gaussian_loss_model(0.25, 1.5),
                                        exponential_loss(1.0), 1.0);
  const double shifted_e = *closed_form_sr(
      gaussian_loss_model(0.25 - cash, 1.5), exponential_loss(1.0), 1.0);
  CHECK(shifted_e == base_e - cash);
}

TEST_CASE("pathwise sensitivity equals the pathwise slope") {
  const ModelSpec m = two_asset_model(0.5, -0.25, 1.0, 0.75);
  const double th1 = 0.25, th2 = 0.75;
  RngStream r1(21, 4), r2(21, 4);  // common random numbers
  for (int i = 0; i < 200; ++i) {
    const XiSample a = draw_with_sensitivity(m, th1, r1);
    const XiSample b = draw_with_sensitivity(m, th2, r2);
    CHECK((b.xi - a.xi) / (th2 - th1) ==
          doctest::Approx(a.xi_prime).epsilon(1e-9));
    CHECK(a.xi_prime == b.xi_prime);
  }
}

TEST_CASE("exact truncated variance matches simulation") {
  const ModelSpec m = truncated_gaussian_loss_model(1.0, 2.0, 1.5);
  const double v = xi_variance_exact(m);
  RngStream r(5, 9);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw(m, r);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double mc = (sum2 - n * mean * mean) / (n - 1);
  CHECK(v == doctest::Approx(mc).epsilon(0.01));
  CHECK(v < 4.0);  // truncation shrinks the variance
}

TEST_CASE("model kind names are stable") {
  CHECK(model_kind_name(ModelKind::GaussianLoss) == "gaussian_loss");
  CHECK(model_kind_name(ModelKind::TruncatedGaussianLoss) ==
        "truncated_gaussian_loss");
  CHECK(model_kind_name(ModelKind::TwoAssetPortfolio) == "two_asset");
}
