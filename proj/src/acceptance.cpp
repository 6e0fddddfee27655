#include "shortfall/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shortfall/bounds.hpp"
#include "shortfall/calibration.hpp"
#include "shortfall/errors.hpp"
#include "shortfall/estimator.hpp"
#include "shortfall/experiments.hpp"
#include "shortfall/gradient.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/optimizer.hpp"
#include "shortfall/rates.hpp"
#include "shortfall/rng.hpp"

namespace shortfall {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Shared state across criteria: the gradient-error envelope constants fitted
// by the gradient-rate criterion feed the optimizer bound, and the m = n
// optimizer sweep supplies the decay ratio the bias-plateau criterion
// contrasts against.
struct Ctx {
  std::uint64_t seed = 0;
  int jobs = 0;
  std::filesystem::path out;
  std::optional<double> c4_fit;
  std::optional<double> c5_fit;
  std::optional<double> mn_decade_ratio;  // MSE(n=10^3) / MSE(n=10^2), m = n
};

// Common scalar-position test bed: standard Gaussian position, exponential
// loss beta = 1, threshold lambda = 1, so the oracle root is 0.5.
ExperimentConfig scalar_exp_config(const Ctx& ctx) {
  ExperimentConfig cfg;
  cfg.model = gaussian_loss_model(0.0, 1.0);
  cfg.loss = exponential_loss(1.0);
  cfg.lambda = 1.0;
  cfg.bracket = Bracket{-2.0, 3.0};
  cfg.n_grid = {1000, 3162, 10000, 31623, 100000};
  cfg.replications = 500;
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  return cfg;
}

RateFit mse_fit(const std::vector<RateRow>& rows, bool vs_m) {
  std::vector<RatePoint> pts;
  for (const auto& r : rows)
    pts.push_back({static_cast<double>(vs_m ? *r.m : *r.n), r.empirical_mse});
  return fit_rate(pts);
}

std::string dominance_text(const BoundsReport& rep) {
  int ok = 0;
  for (const auto& c : rep.checks) ok += c.pass ? 1 : 0;
  return std::to_string(ok) + "/" + std::to_string(rep.checks.size()) +
         " rows under bound";
}

// Monotonicity-parameter lower bound for the exponential loss over a bracket
// when xi is Gaussian(mean, sd): |g'| is minimized at the bracket's upper end.
double exp_mu1(double beta, double mean, double sd, double t_hi) {
  return beta * std::exp(beta * (mean - t_hi) + 0.5 * beta * beta * sd * sd);
}

CriterionResult crit_tuned_rate(Ctx& ctx) {
  ExperimentConfig cfg = scalar_exp_config(ctx);
  cfg.experiment = ExperimentKind::EstimateRate;
  // mu1*c = 0.75 with the calibrated mu1 of this bracket.
  cfg.schedule = {0.75 / exp_mu1(1.0, 0.0, 1.0, cfg.bracket->hi), 1.0};
  cfg.bound = "tuned";
  cfg.output_dir = (ctx.out / "tuned_rate").string();
  const ExperimentResult res = run(cfg);
  const RateFit fit = mse_fit(res.rows, false);
  const BoundsReport rep = compare_bounds(res.csv_path);
  const bool slope_ok = std::abs(fit.slope - (-1.0)) <= 0.15;
  CriterionResult out;
  out.name = "tuned-step-rate";
  out.pass = slope_ok && rep.all_pass;
  out.detail = "mse slope vs n = " + fmt(fit.slope) + " (target -1 +/- 0.15), " +
               dominance_text(rep);
  return out;
}

CriterionResult crit_universal_rate(Ctx& ctx) {
  ExperimentConfig cfg = scalar_exp_config(ctx);
  cfg.experiment = ExperimentKind::EstimateRate;
  cfg.schedule = {1.0, 0.7};
  cfg.bound = "universal";
  cfg.output_dir = (ctx.out / "universal_rate").string();
  const ExperimentResult res = run(cfg);
  const RateFit fit = mse_fit(res.rows, false);
  const BoundsReport rep = compare_bounds(res.csv_path);
  const bool slope_ok = std::abs(fit.slope - (-0.7)) <= 0.15;
  CriterionResult out;
  out.name = "universal-step-rate";
  out.pass = slope_ok && rep.all_pass;
  out.detail = "mse slope vs n = " + fmt(fit.slope) +
               " (target -0.7 +/- 0.15), " + dominance_text(rep);
  return out;
}

CriterionResult crit_hp_bound(Ctx& ctx) {
  // The high-probability certificate needs c*L1^2 < mu1; the identity loss
  // satisfies it with room (L1 = mu1 = 1), and Gaussian(0.5, 1) with
  // lambda = 0 keeps the oracle root at 0.5.
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::EstimateHP;
  cfg.model = gaussian_loss_model(0.5, 1.0);
  cfg.loss = identity_loss();
  cfg.lambda = 0.0;
  cfg.bracket = Bracket{-2.0, 3.0};
  cfg.schedule = {0.75, 1.0};
  cfg.delta = 0.05;
  cfg.n_grid = {1000, 10000};
  cfg.replications = 2000;
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.bound = "tuned";
  cfg.output_dir = (ctx.out / "hp_bound").string();
  const ExperimentResult res = run(cfg);
  const BoundsReport rep = compare_bounds(res.csv_path);
  CriterionResult out;
  out.name = "high-probability-bound";
  out.pass = rep.all_pass;
  std::string q;
  for (const auto& r : res.rows) {
    if (!q.empty()) q += ", ";
    q += "q95(n=" + std::to_string(*r.n) + ") = " + fmt(r.empirical_mse) +
         " vs bound " + fmt(r.bound);
  }
  out.detail = q + "; " + dominance_text(rep);
  return out;
}

CriterionResult crit_gradient_rate(Ctx& ctx) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::GradientRate;
  cfg.model = two_asset_model(0.5, 0.0, 1.0, 1.0);
  cfg.loss = exponential_loss(1.0);
  cfg.lambda = 1.0;
  cfg.theta = 0.5;
  cfg.bracket = Bracket{-2.0, 3.0};
  // xi(0.5) is Gaussian(-0.25, sqrt(0.5)); tune the inner root-finder.
  cfg.schedule = {0.75 / exp_mu1(1.0, -0.25, std::sqrt(0.5), 3.0), 1.0};
  cfg.m_grid = {100, 1000, 10000, 100000};
  cfg.replications = 200;
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.output_dir = (ctx.out / "gradient_rate").string();
  const ExperimentResult res = run(cfg);
  const double mae_slope = res.measured.at("mae_fit").at("slope").get<double>();
  const RateFit m2_fit = mse_fit(res.rows, true);
  ctx.c4_fit = res.measured.at("c4_fit").get<double>();
  ctx.c5_fit = res.measured.at("c5_fit").get<double>();
  const bool mae_ok = std::abs(mae_slope - (-0.5)) <= 0.15;
  const bool no_increase = m2_fit.slope <= 0.0;
  CriterionResult out;
  out.name = "gradient-batch-rate";
  out.pass = mae_ok && no_increase;
  out.detail = "mean-abs-error slope vs m = " + fmt(mae_slope) +
               " (target -0.5 +/- 0.15); second-moment slope = " +
               fmt(m2_fit.slope) + " (no increasing trend)";
  return out;
}

ExperimentConfig portfolio_opt_config(const Ctx& ctx) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::OptimizeRate;
  cfg.model = two_asset_model(0.5, 0.0, 1.0, 1.0);
  cfg.loss = exponential_loss(1.0);
  cfg.lambda = 1.0;
  cfg.theta0 = 0.5;
  cfg.bracket = Bracket{-2.0, 3.0};
  // mu2 = beta*(s1^2 + s2^2) = 2, so c = 0.375 gives mu2*c = 0.75.
  cfg.schedule = {0.375, 1.0};
  cfg.replications = 200;
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.c4 = ctx.c4_fit;
  cfg.c5 = ctx.c5_fit;
  return cfg;
}

CriterionResult crit_optimizer_rate(Ctx& ctx) {
  ExperimentConfig cfg = portfolio_opt_config(ctx);
  cfg.batch = horizon_batch(1.0);
  cfg.n_grid = {100, 316, 1000};
  cfg.output_dir = (ctx.out / "optimizer_rate").string();
  const ExperimentResult res = run(cfg);
  const RateFit fit = mse_fit(res.rows, false);
  std::vector<RatePoint> draw_pts;
  for (const auto& r : res.rows) {
    const double n = static_cast<double>(*r.n);
    draw_pts.push_back({2.0 * n * n, r.empirical_mse});  // total draws n*2m
  }
  const RateFit draw_fit = fit_rate(draw_pts);
  ctx.mn_decade_ratio =
      res.rows.back().empirical_mse / res.rows.front().empirical_mse;
  const double gap_slope =
      res.measured.at("sr_gap_fit").at("slope").get<double>();
  const bool mse_ok = std::abs(fit.slope - (-1.0)) <= 0.2;
  const bool gap_ok = std::abs(gap_slope - (-1.0)) <= 0.25;
  CriterionResult out;
  out.name = "optimizer-rate";
  out.pass = mse_ok && gap_ok;
  out.detail = "mse slope vs n = " + fmt(fit.slope) +
               " (target -1 +/- 0.2); risk-gap slope = " + fmt(gap_slope) +
               " (target -1 +/- 0.25); mse slope vs total draws = " +
               fmt(draw_fit.slope);
  return out;
}

CriterionResult crit_bias_plateau(Ctx& ctx) {
  ExperimentConfig cfg = portfolio_opt_config(ctx);
  cfg.batch = fixed_batch(64);
  cfg.n_grid = {10000, 100000};
  cfg.output_dir = (ctx.out / "bias_plateau").string();
  const ExperimentResult res = run(cfg);
  const double plateau =
      res.rows.back().empirical_mse / res.rows.front().empirical_mse;
  const double contrast = ctx.mn_decade_ratio ? *ctx.mn_decade_ratio
                                              : std::nan("");
  const bool plateau_ok = plateau >= 0.5;
  const bool contrast_ok = contrast <= 0.25;  // false when NaN
  CriterionResult out;
  out.name = "bias-plateau";
  out.pass = plateau_ok && contrast_ok;
  out.detail = "fixed m=64 MSE(1e5)/MSE(1e4) = " + fmt(plateau) +
               " (>= 0.5); m=n decade ratio = " + fmt(contrast) +
               " (<= 0.25)";
  return out;
}

// One randomly drawn (model, loss, lambda) configuration with a closed-form
// root. Exponential loss is only paired with models whose xi is exactly
// Gaussian, so the oracle always exists.
struct RandomCase {
  ModelSpec model;
  LossSpec loss;
  double lambda = 1.0;
  std::optional<double> theta;
};

RandomCase draw_case(RngStream& meta) {
  RandomCase rc;
  const int model_pick = static_cast<int>(meta.uniform01() * 3.0);
  const bool truncated = model_pick == 1;
  const bool exp_loss = !truncated && meta.uniform01() < 0.5;
  // Exponential calibration constants blow up with wide positions; keep the
  // dispersion moderate there.
  const double sd_lo = 0.5;
  const double sd_span = exp_loss ? 0.7 : 1.5;
  if (model_pick == 0) {
    const double mean = -1.0 + 2.0 * meta.uniform01();
    const double sd = sd_lo + sd_span * meta.uniform01();
    rc.model = gaussian_loss_model(mean, sd);
  } else if (model_pick == 1) {
    const double mean = -1.0 + 2.0 * meta.uniform01();
    const double sd = sd_lo + sd_span * meta.uniform01();
    const double clip = 1.5 + 1.5 * meta.uniform01();
    rc.model = truncated_gaussian_loss_model(mean, sd, clip);
  } else {
    const double m1 = -1.0 + 2.0 * meta.uniform01();
    const double m2 = -1.0 + 2.0 * meta.uniform01();
    const double s1 = sd_lo + sd_span * meta.uniform01();
    const double s2 = sd_lo + sd_span * meta.uniform01();
    rc.model = two_asset_model(m1, m2, s1, s2);
    rc.theta = 0.1 + 0.8 * meta.uniform01();
  }
  if (exp_loss) {
    rc.loss = exponential_loss(0.5 + meta.uniform01());
    rc.lambda = 0.5 + 1.5 * meta.uniform01();
  } else {
    rc.loss = identity_loss();
    rc.lambda = -0.5 + meta.uniform01();
  }
  return rc;
}

CriterionResult crit_oracle_equivalence(Ctx& ctx) {
  constexpr int kCases = 50;
  constexpr std::int64_t kN = 100000;
  int ok = 0;
  double worst_oracle = 0.0;  // max |saa - t*| / (3 se)
  double worst_sa = 0.0;      // max |sa - saa| / tolerance
  for (int i = 0; i < kCases; ++i) {
    RngStream meta(ctx.seed, 0xC7);
    meta.skip(static_cast<std::uint64_t>(i) * 16);
    RandomCase rc = draw_case(meta);
    const double t_star =
        *closed_form_sr(rc.model, rc.loss, rc.lambda, rc.theta);

    std::vector<double> xis(kN);
    RngStream smp(ctx.seed, 0xC700 + static_cast<std::uint64_t>(i));
    for (auto& x : xis) x = draw_xi(rc.model, rc.theta, smp);

    const Bracket br = bracket_search_on_samples(xis, rc.loss, rc.lambda);
    const double saa = saa_binary_search(xis, rc.loss, rc.lambda, br);

    // Delta method: sd of the empirical root is the sd of the empirical g at
    // the root over the local slope.
    const double h = 1e-4 * std::max(1.0, br.width());
    const double gp =
        (detail::empirical_g(xis, rc.loss, rc.lambda, saa + h) -
         detail::empirical_g(xis, rc.loss, rc.lambda, saa - h)) /
        (2.0 * h);
    const double se_root =
        detail::empirical_g_stderr(xis, rc.loss, rc.lambda, saa) /
        std::max(std::abs(gp), 1e-12);

    RngStream mc(ctx.seed, 0xC7000000 + static_cast<std::uint64_t>(i));
    const BracketCalibration cal =
        calibrate_on_bracket(rc.model, rc.loss, rc.lambda, br, rc.theta, mc);
    const StepSchedule sched{0.75 / cal.mu1, 1.0};
    EstimatorConfig ec(rc.loss, rc.lambda, br, sched, br.midpoint());
    std::size_t idx = 0;
    const EstimateResult sa = estimate_with(
        [&] { return xis[idx++]; }, ec, kN, kN);

    BoundParams bp;
    bp.mu1 = cal.mu1;
    bp.c = sched.c;
    bp.alpha = 1.0;
    bp.sigma2 = cal.sigma2;
    bp.init_err2 = (ec.t0 - t_star) * (ec.t0 - t_star);
    const double sa_tol = 5.0 * std::sqrt(estimator_mse_bound_tuned(bp, kN));

    const double r_oracle = std::abs(saa - t_star) / (3.0 * se_root);
    const double r_sa = std::abs(sa.final_t - saa) / sa_tol;
    worst_oracle = std::max(worst_oracle, r_oracle);
    worst_sa = std::max(worst_sa, r_sa);
    if (r_oracle <= 1.0 && r_sa <= 1.0) ++ok;
  }
  CriterionResult out;
  out.name = "oracle-equivalence";
  out.pass = ok == kCases;
  out.detail = std::to_string(ok) + "/" + std::to_string(kCases) +
               " random configurations agree; worst |saa-oracle|/(3 se) = " +
               fmt(worst_oracle) + ", worst |sa-saa|/tolerance = " +
               fmt(worst_sa);
  return out;
}

// ---- invariant checks (criterion 8) ----

bool inv_projection() {
  const Bracket br{-1.0, 2.0};
  const double xs[] = {-1e9, -3.7, -1.0, -0.2, 0.0, 0.4, 1.0, 2.5, 1e9};
  for (const double x : xs) {
    const double p = project(x, br.lo, br.hi);
    if (project(p, br.lo, br.hi) != p) return false;
    if (p < br.lo || p > br.hi) return false;
    for (const double y : xs) {
      const double q = project(y, br.lo, br.hi);
      if (std::abs(p - q) > std::abs(x - y)) return false;
    }
  }
  return true;
}

bool inv_confinement(const Ctx& ctx) {
  const ModelSpec model = gaussian_loss_model(0.0, 1.0);
  const Bracket br{-2.0, 3.0};
  EstimatorConfig ec(exponential_loss(1.0), 1.0, br,
                     {0.75 / exp_mu1(1.0, 0.0, 1.0, br.hi), 1.0});
  RngStream rng(ctx.seed, 0x8A);
  const EstimateResult er = estimate(model, ec, 2000, rng, 1);
  for (const auto& p : er.trajectory)
    if (!br.contains(p.t)) return false;

  const ModelSpec port = two_asset_model(0.5, 0.0, 1.0, 1.0);
  OptimizerConfig oc;
  oc.domain = {port.theta_lo, port.theta_hi};
  oc.theta0 = 0.5;
  oc.schedule = {0.375, 1.0};
  oc.batch = fixed_batch(16);
  oc.estimator = EstimatorConfig(exponential_loss(1.0), 1.0, br,
                                 {0.375, 1.0});
  RngStream rng2(ctx.seed, 0x8B);
  const OptimizeResult orr = optimize(port, oc, 200, rng2, 1);
  for (const auto& p : orr.trajectory)
    if (p.theta < oc.domain.lo || p.theta > oc.domain.hi) return false;
  return orr.total_draws == 200 * 2 * 16;
}

bool inv_cash_invariance() {
  // Adding deterministic cash shifts the risk down by exactly that amount.
  // Dyadic parameters keep the closed forms exactly representable.
  const double cash = 1.5;
  const double base_i =
      *closed_form_sr(gaussian_loss_model(0.25, 1.5), identity_loss(), 0.5);
  const double shifted_i = *closed_form_sr(
      gaussian_loss_model(0.25 - cash, 1.5), identity_loss(), 0.5);
  if (shifted_i != base_i - cash) return false;
  const double base_e =
      *closed_form_sr(gaussian_loss_model(0.25, 1.5), exponential_loss(1.0),
                      1.0);
  const double shifted_e = *closed_form_sr(
      gaussian_loss_model(0.25 - cash, 1.5), exponential_loss(1.0), 1.0);
  return shifted_e == base_e - cash;
}

bool inv_fd_agreement() {
  const LossSpec losses[] = {identity_loss(), exponential_loss(1.3),
                             piecewise_polynomial_loss(0.5, 3)};
  const double h = 1e-5;
  for (const auto& l : losses) {
    for (double x = -5.0; x <= 5.0; x += 0.625) {
      if (l.kind == LossKind::PiecewisePolynomial &&
          std::abs(x - 0.5) < 0.1)
        continue;  // kink: one-sided derivatives differ
      const double fd = (loss_eval(l, x + h) - loss_eval(l, x - h)) / (2 * h);
      const double an = loss_deriv1(l, x);
      if (std::abs(fd - an) > 1e-6 * std::max(1.0, std::abs(an)))
        return false;
    }
  }
  const ModelSpec port = two_asset_model(0.5, -0.25, 1.0, 0.75);
  const LossSpec el = exponential_loss(1.0);
  const double ht = 1e-6;
  for (double theta = 0.1; theta < 0.95; theta += 0.2) {
    const double fd = (*closed_form_sr(port, el, 1.0, theta + ht) -
                       *closed_form_sr(port, el, 1.0, theta - ht)) /
                      (2 * ht);
    const double an = *closed_form_sr_derivative(port, el, 1.0, theta);
    if (std::abs(fd - an) > 1e-6 * std::max(1.0, std::abs(an))) return false;
  }
  return true;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool inv_determinism(const Ctx& ctx) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::EstimateRate;
  cfg.model = gaussian_loss_model(0.0, 1.0);
  cfg.loss = exponential_loss(1.0);
  cfg.lambda = 1.0;
  cfg.bracket = Bracket{-2.0, 3.0};
  cfg.schedule = {0.75 / exp_mu1(1.0, 0.0, 1.0, 3.0), 1.0};
  cfg.n_grid = {100, 316};
  cfg.replications = 8;
  cfg.seed = ctx.seed;
  cfg.jobs = 1;
  cfg.output_dir = (ctx.out / "determinism_a").string();
  const ExperimentResult a = run(cfg);
  cfg.output_dir = (ctx.out / "determinism_b").string();
  const ExperimentResult b = run(cfg);
  cfg.jobs = 4;  // scheduling must not leak into the output
  cfg.output_dir = (ctx.out / "determinism_j4").string();
  const ExperimentResult c = run(cfg);
  const std::string bytes_a = slurp(a.csv_path);
  return !bytes_a.empty() && bytes_a == slurp(b.csv_path) &&
         bytes_a == slurp(c.csv_path);
}

bool inv_guard_fires(const Ctx& ctx) {
  // xi concentrates near -10 while the bracket sits at [1, 2]: every loss
  // argument is far below the polynomial threshold, so b_m must be ~0 and
  // the guard must fire rather than divide.
  const ModelSpec port = two_asset_model(10.0, 10.0, 1e-3, 1e-3);
  EstimatorConfig ec(piecewise_polynomial_loss(0.0, 2), 0.5, Bracket{1.0, 2.0},
                     {1.0, 1.0});
  RngStream rng(ctx.seed, 0x8C);
  try {
    (void)estimate_gradient(port, 0.5, 256, ec, rng);
  } catch (const BmBelowEta&) {
    return true;
  }
  return false;
}

CriterionResult crit_invariants(Ctx& ctx) {
  struct Check {
    const char* name;
    bool ok;
  };
  const Check checks[] = {
      {"projection", inv_projection()},
      {"confinement", inv_confinement(ctx)},
      {"cash-invariance", inv_cash_invariance()},
      {"finite-difference", inv_fd_agreement()},
      {"determinism", inv_determinism(ctx)},
      {"batch-mean-guard", inv_guard_fires(ctx)},
  };
  int ok = 0;
  std::string failed;
  for (const auto& c : checks) {
    if (c.ok) {
      ++ok;
    } else {
      if (!failed.empty()) failed += ",";
      failed += c.name;
    }
  }
  CriterionResult out;
  out.name = "invariants";
  out.pass = ok == 6;
  out.detail = std::to_string(ok) + "/6 invariant groups pass";
  if (!failed.empty()) out.detail += " (failed: " + failed + ")";
  return out;
}

}  // namespace

AcceptanceReport run_acceptance(std::uint64_t seed, int jobs,
                                const std::string& out_dir,
                                std::ostream& log) {
  Ctx ctx;
  ctx.seed = seed;
  ctx.jobs = jobs;
  ctx.out = out_dir;
  std::filesystem::create_directories(ctx.out);

  using CritFn = std::function<CriterionResult(Ctx&)>;
  const std::pair<const char*, CritFn> plan[] = {
      {"tuned-step-rate", crit_tuned_rate},
      {"universal-step-rate", crit_universal_rate},
      {"high-probability-bound", crit_hp_bound},
      {"gradient-batch-rate", crit_gradient_rate},
      {"optimizer-rate", crit_optimizer_rate},
      {"bias-plateau", crit_bias_plateau},
      {"oracle-equivalence", crit_oracle_equivalence},
      {"invariants", crit_invariants},
  };

  AcceptanceReport report;
  report.all_pass = true;
  int idx = 0;
  for (const auto& [name, fn] : plan) {
    ++idx;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = fn(ctx);
    } catch (const std::exception& e) {
      r.name = name;
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    log << (r.pass ? "[PASS] " : "[FAIL] ") << idx << " " << r.name << ": "
        << r.detail << " [" << fmt(secs) << "s]" << std::endl;
    report.all_pass = report.all_pass && r.pass;
    report.criteria.push_back(std::move(r));
  }
  int npass = 0;
  for (const auto& c : report.criteria) npass += c.pass ? 1 : 0;
  log << "acceptance: " << npass << "/" << report.criteria.size()
      << " criteria pass" << std::endl;
  return report;
}

}  // namespace shortfall
