#include <doctest.h>

#include <cmath>
#include <vector>

#include "shortfall/bounds.hpp"
#include "shortfall/errors.hpp"

using namespace shortfall;

namespace {

BoundParams tuned_params() {
  BoundParams p;
  p.mu1 = 1.0;
  p.c = 0.75;
  p.sigma2 = 1.0;
  p.init_err2 = 1.0;
  return p;
}

BoundParams hp_tuned_params() {
  BoundParams p = tuned_params();
  p.L1 = 0.5;
  p.nu = 1.0;
  return p;
}

BoundParams harmonic_params() {
  BoundParams p = tuned_params();
  p.alpha = 1.0;
  p.B = 1.0;
  p.n0 = 1;
  return p;
}

BoundParams poly_hp_params() {
  BoundParams p;
  p.mu1 = 1.0;
  p.c = 1.0;
  p.alpha = 0.5;
  p.sigma2 = 1.0;
  p.init_err2 = 1.0;
  p.B = 1.0;
  p.L1 = 0.5;
  p.nu = 1.0;
  p.n0 = 4;
  return p;
}

BoundParams optimizer_params() {
  BoundParams p;
  p.mu2 = 1.0;
  p.c = 0.75;
  p.init_err2 = 1.0;
  return p;
}

}  // namespace

TEST_CASE("tuned mse bound: frozen value and structure") {
  const BoundParams p = tuned_params();
  // n=1: init + sigma2*2^{1.5}*c^2/(0.5*1)
  CHECK(estimator_mse_bound_tuned(p, 1) ==
        doctest::Approx(4.181980515339465).epsilon(1e-12));
  // noise term alone once init is removed
  BoundParams q = p;
  q.init_err2 = 0.0;
  const double noise_100 = estimator_mse_bound_tuned(q, 100);
  CHECK(noise_100 ==
        doctest::Approx(std::pow(2.0, 1.5) * 0.5625 / (0.5 * 100.0))
            .epsilon(1e-12));
}

TEST_CASE("tuned mse bound: sigma2=0 leaves a pure power law") {
  BoundParams p = tuned_params();
  p.sigma2 = 0.0;
  // init_err2 / n^{1.5}: quadrupling n divides the bound by 8
  for (std::int64_t n : {4, 16, 64, 1024}) {
    const double r =
        estimator_mse_bound_tuned(p, n) / estimator_mse_bound_tuned(p, 4 * n);
    CHECK(r == doctest::Approx(8.0).epsilon(1e-12));
  }
  CHECK(estimator_mse_bound_tuned(p, 1000) ==
        doctest::Approx(std::pow(1000.0, -1.5)).epsilon(1e-12));
}

TEST_CASE("tuned mse bound: regime and input validation") {
  BoundParams p = tuned_params();
  p.c = 0.5;  // mu1*c = 0.5 sits on the boundary
  CHECK_THROWS_AS(estimator_mse_bound_tuned(p, 10), RegimeViolation);
  p.c = 1.0;  // mu1*c = 1 also excluded
  CHECK_THROWS_AS(estimator_mse_bound_tuned(p, 10), RegimeViolation);
  p.c = 1.3;
  CHECK_THROWS_AS(estimator_mse_bound_tuned(p, 10), RegimeViolation);
  p = tuned_params();
  CHECK_THROWS_AS(estimator_mse_bound_tuned(p, 0), ConfigError);
  p.c = 0.0;
  CHECK_THROWS_AS(estimator_mse_bound_tuned(p, 10), ConfigError);
  p = tuned_params();
  p.sigma2 = -1.0;
  CHECK_THROWS_AS(estimator_mse_bound_tuned(p, 10), ConfigError);
}

TEST_CASE("tuned hp bound: frozen value and delta behavior") {
  const BoundParams p = hp_tuned_params();
  CHECK(estimator_hp_bound_tuned(p, 100, 0.05) ==
        doctest::Approx(2.408604835724426).epsilon(1e-12));
  // delta = 1 kills the deviation term; what is left is
  // sqrt(init)/n^{0.75} + c*sqrt(sigma2)*2^{1.5}/sqrt(0.5 n)
  CHECK(estimator_hp_bound_tuned(p, 100, 1.0) ==
        doctest::Approx(0.3316227766016838).epsilon(1e-12));
  // tighter delta means a wider radius
  CHECK(estimator_hp_bound_tuned(p, 100, 0.01) >
        estimator_hp_bound_tuned(p, 100, 0.1));
}

TEST_CASE("tuned hp bound: regimes and validation") {
  BoundParams p = hp_tuned_params();
  p.L1 = 1.2;  // c*L1^2 = 1.08 >= mu1
  CHECK_THROWS_AS(estimator_hp_bound_tuned(p, 100, 0.05), RegimeViolation);
  p = hp_tuned_params();
  p.c = 0.5;  // mu1*c on the boundary
  CHECK_THROWS_AS(estimator_hp_bound_tuned(p, 100, 0.05), RegimeViolation);
  p = hp_tuned_params();
  CHECK_THROWS_AS(estimator_hp_bound_tuned(p, 100, 0.0), ConfigError);
  CHECK_THROWS_AS(estimator_hp_bound_tuned(p, 100, 1.5), ConfigError);
  p.L1 = 0.0;
  CHECK_THROWS_AS(estimator_hp_bound_tuned(p, 100, 0.05), ConfigError);
  p = hp_tuned_params();
  p.nu = 0.0;
  CHECK_THROWS_AS(estimator_hp_bound_tuned(p, 100, 0.05), ConfigError);
}

TEST_CASE("universal harmonic bound: frozen value") {
  const BoundParams p = harmonic_params();
  CHECK(estimator_mse_bound_universal(p, 100, StepCase::Harmonic) ==
        doctest::Approx(0.10168906759037308).epsilon(1e-12));
}

TEST_CASE("universal harmonic bound: all three noise branches") {
  const double pi2_6 = 3.14159265358979323846 * 3.14159265358979323846 / 6.0;
  const double n = 100.0;

  // mu1*c = 0.25: both terms scale as n^{-1/2}
  BoundParams p = harmonic_params();
  p.c = 0.25;
  const double r = estimator_mse_bound_universal(p, 100, StepCase::Harmonic) /
                   estimator_mse_bound_universal(p, 400, StepCase::Harmonic);
  CHECK(r == doctest::Approx(2.0).epsilon(1e-12));
  {
    const double cn0 = (1.0 + 0.0625) * std::pow(2.0, 0.5);
    const double lead = cn0 * (1.0 + pi2_6) / std::pow(n, 0.5);
    const double k1 =
        std::pow(2.0, 1.5) * 0.0625 / (0.5 * std::pow(n, 0.5));
    CHECK(estimator_mse_bound_universal(p, 100, StepCase::Harmonic) ==
          doctest::Approx(lead + k1).epsilon(1e-12));
  }

  // mu1*c = 0.5: logarithmic branch
  p = harmonic_params();
  p.c = 0.5;
  {
    const double cn0 = (1.0 + 0.25) * 2.0;
    const double lead = cn0 * (1.0 + pi2_6) / n;
    const double k1 = 2.0 * 0.25 * std::log(n + 1.0) / n;
    CHECK(estimator_mse_bound_universal(p, 100, StepCase::Harmonic) ==
          doctest::Approx(lead + k1).epsilon(1e-12));
  }

  // mu1*c = 0.75: 1/n branch, checked against the hand formula
  p = harmonic_params();
  {
    const double cn0 = (1.0 + 0.5625) * std::pow(2.0, 1.5);
    const double lead = cn0 * (1.0 + pi2_6) / std::pow(n, 1.5);
    const double k1 = std::pow(2.0, 3.0) * 0.5625 / (0.5 * n);
    CHECK(estimator_mse_bound_universal(p, 100, StepCase::Harmonic) ==
          doctest::Approx(lead + k1).epsilon(1e-12));
  }
}

TEST_CASE("universal polynomial bound: surviving term with sigma2=0") {
  BoundParams p;
  p.mu1 = 1.0;
  p.c = 0.5;
  p.alpha = 0.5;
  p.sigma2 = 0.0;
  p.init_err2 = 1.0;
  p.B = 0.0;
  p.n0 = 1;
  // C(n0) = exp(2 mu1 c / (1-alpha)), lead decays exp(-2 mu1 c n^{1-a}/(1-a))
  const double expect =
      std::exp(2.0 * 0.5 * (1.0 - std::sqrt(100.0)) / 0.5);
  CHECK(estimator_mse_bound_universal(p, 100, StepCase::Polynomial) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("universal bounds: case and regime gates") {
  BoundParams p = harmonic_params();
  p.alpha = 0.7;
  CHECK_THROWS_AS(estimator_mse_bound_universal(p, 100, StepCase::Harmonic),
                  CaseMismatch);
  CHECK_NOTHROW(estimator_mse_bound_universal(p, 100, StepCase::Polynomial));
  p.alpha = 1.0;
  CHECK_THROWS_AS(estimator_mse_bound_universal(p, 100, StepCase::Polynomial),
                  CaseMismatch);

  // step smallness: mu1 * a_{n0} must stay below 1
  p = harmonic_params();
  p.mu1 = 2.0;  // a_1 = 0.75 -> mu1*a_1 = 1.5
  CHECK_THROWS_AS(estimator_mse_bound_universal(p, 100, StepCase::Harmonic),
                  RegimeViolation);
  p.n0 = 2;  // a_2 = 0.375 -> 0.75 < 1 recovers
  CHECK_NOTHROW(estimator_mse_bound_universal(p, 100, StepCase::Harmonic));

  // n below the smallness index is a usage error
  p = harmonic_params();
  p.n0 = 10;
  CHECK_THROWS_AS(estimator_mse_bound_universal(p, 5, StepCase::Harmonic),
                  ConfigError);
}

TEST_CASE("universal hp bound: frozen values") {
  const BoundParams p = poly_hp_params();
  CHECK(estimator_hp_bound_universal(p, 100, 0.05) ==
        doctest::Approx(5.303374947979645).epsilon(1e-12));
  CHECK(estimator_hp_bound_universal(p, 100, 1.0) ==
        doctest::Approx(0.9165978244655221).epsilon(1e-12));
}

TEST_CASE("universal hp bound: gates") {
  BoundParams p = poly_hp_params();
  p.alpha = 1.0;
  CHECK_THROWS_AS(estimator_hp_bound_universal(p, 100, 0.05), CaseMismatch);
  p = poly_hp_params();
  p.L1 = 2.0;  // L1^2 * a_{n0} = 4 * 0.5 = 2 >= mu1
  CHECK_THROWS_AS(estimator_hp_bound_universal(p, 100, 0.05), RegimeViolation);
  p = poly_hp_params();
  CHECK_THROWS_AS(estimator_hp_bound_universal(p, 2, 0.05), ConfigError);
  CHECK_THROWS_AS(estimator_hp_bound_universal(p, 100, 0.0), ConfigError);
}

TEST_CASE("optimizer bound: frozen value and limits") {
  const BoundParams p = optimizer_params();
  CHECK(optimizer_mse_bound(p, 100, 100, 1.0, 1.0) ==
        doctest::Approx(0.33845941546018393).epsilon(1e-12));

  // C4=C5=0 leaves only the forgetting term 3 init / n^{2 mu2 c}
  CHECK(optimizer_mse_bound(p, 1000, 7, 0.0, 0.0) ==
        doctest::Approx(3.0 * std::pow(1000.0, -1.5)).epsilon(1e-12));

  // huge batches kill the C7/m term
  const double c6 = 3.0 * std::pow(2.0, 1.5) * 0.5625 / 0.5;
  const double expect = 3.0 / std::pow(100.0, 1.5) + c6 / 100.0;
  CHECK(optimizer_mse_bound(p, 100, 1000000000000000LL, 1.0, 1.0) ==
        doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("optimizer bound: gates") {
  BoundParams p = optimizer_params();
  p.c = 0.5;  // mu2*c = 0.5 on the boundary
  CHECK_THROWS_AS(optimizer_mse_bound(p, 100, 100, 1.0, 1.0), RegimeViolation);
  p = optimizer_params();
  CHECK_THROWS_AS(optimizer_mse_bound(p, 0, 100, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(optimizer_mse_bound(p, 100, 0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(optimizer_mse_bound(p, 100, 100, -1.0, 1.0), ConfigError);
  p.mu2 = 0.0;
  CHECK_THROWS_AS(optimizer_mse_bound(p, 100, 100, 1.0, 1.0), ConfigError);
}

TEST_CASE("bounds are positive and non-increasing along n") {
  const std::vector<std::int64_t> grid = {10, 32, 100, 316, 1000, 10000};
  const BoundParams pt = tuned_params();
  const BoundParams ph = hp_tuned_params();
  const BoundParams pu = harmonic_params();
  BoundParams pp = poly_hp_params();
  const BoundParams po = optimizer_params();
  double prev_t = 0.0, prev_h = 0.0, prev_u = 0.0, prev_p = 0.0, prev_pm = 0.0,
         prev_o = 0.0;
  bool first = true;
  for (std::int64_t n : grid) {
    const double bt = estimator_mse_bound_tuned(pt, n);
    const double bh = estimator_hp_bound_tuned(ph, n, 0.05);
    const double bu = estimator_mse_bound_universal(pu, n, StepCase::Harmonic);
    const double bp = estimator_hp_bound_universal(pp, n, 0.05);
    const double bpm = estimator_mse_bound_universal(pp, n, StepCase::Polynomial);
    const double bo = optimizer_mse_bound(po, n, n, 1.0, 1.0);
    for (double b : {bt, bh, bu, bp, bpm, bo}) CHECK(b > 0.0);
    if (!first) {
      CHECK(bt <= prev_t);
      CHECK(bh <= prev_h);
      CHECK(bu <= prev_u);
      CHECK(bp <= prev_p);
      CHECK(bpm <= prev_pm);
      CHECK(bo <= prev_o);
    }
    prev_t = bt;
    prev_h = bh;
    prev_u = bu;
    prev_p = bp;
    prev_pm = bpm;
    prev_o = bo;
    first = false;
  }
}

TEST_CASE("tuned and universal harmonic bounds agree on the 1/n rate") {
  // For mu1*c = 0.75 both noise terms scale as 1/n; the universal one pays
  // an extra 2^{2 mu1 c} factor. At large n the ratio approaches it.
  const BoundParams pt = tuned_params();
  const BoundParams pu = harmonic_params();
  const std::int64_t n = 100000000;
  const double ratio =
      estimator_mse_bound_universal(pu, n, StepCase::Harmonic) /
      estimator_mse_bound_tuned(pt, n);
  CHECK(ratio == doctest::Approx(2.8284271247461903).epsilon(1e-3));
}
