#include "shortfall/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "shortfall/calibration.hpp"
#include "shortfall/digest.hpp"
#include "shortfall/gradient.hpp"
#include "shortfall/rates.hpp"

namespace shortfall {

std::string experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::EstimateRate: return "estimate_rate";
    case ExperimentKind::EstimateHP: return "estimate_hp";
    case ExperimentKind::GradientRate: return "gradient_rate";
    case ExperimentKind::OptimizeRate: return "optimize_rate";
    case ExperimentKind::SaaCompare: return "saa_compare";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "estimate_rate") return ExperimentKind::EstimateRate;
  if (s == "estimate_hp") return ExperimentKind::EstimateHP;
  if (s == "gradient_rate") return ExperimentKind::GradientRate;
  if (s == "optimize_rate") return ExperimentKind::OptimizeRate;
  if (s == "saa_compare") return ExperimentKind::SaaCompare;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kCalibStreamBase = 1ull << 62;
constexpr char kRatesHeader[] =
    "experiment,n,m,replications,empirical_mse,stderr,bound,slope_cum";
constexpr char kCompareHeader[] =
    "replication,n,closed_form,sa_estimate,saa_root,saa_stderr,diff_sa_saa,"
    "diff_saa_oracle";

std::uint64_t sweep_stream(std::size_t grid_index, std::int64_t rep) {
  return (static_cast<std::uint64_t>(grid_index) << 32) |
         static_cast<std::uint64_t>(rep);
}

std::string fmt17(double v) {
  char b[64];
  std::snprintf(b, sizeof(b), "%.17g", v);
  return std::string(b);
}

std::string fmt_int(std::int64_t v) {
  char b[32];
  std::snprintf(b, sizeof(b), "%lld", static_cast<long long>(v));
  return std::string(b);
}

// Index-claiming worker pool; results land in caller-indexed slots, so the
// reduction order never depends on scheduling.
void parallel_for(std::int64_t total, int jobs_req,
                  const std::function<void(std::int64_t)>& body) {
  int jobs = jobs_req > 0
                 ? jobs_req
                 : static_cast<int>(
                       std::max(1u, std::thread::hardware_concurrency()));
  jobs = static_cast<int>(std::min<std::int64_t>(jobs, total));
  if (jobs <= 1) {
    for (std::int64_t i = 0; i < total; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_err;
  auto work = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= total) return;
      try {
        body(i);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!first_err) first_err = std::current_exception();
        }
        next.store(total);
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(jobs));
  for (int j = 0; j < jobs; ++j) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (first_err) std::rethrow_exception(first_err);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  double s = 0.0;
  for (const double x : v) s += x;
  const double mean = s / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(std::max(var, 0.0) / n)};
}

// Everything derived from the config before the sweep: bracket, calibration
// constants (worst case over theta probes for the portfolio), sub-Gaussian
// scale, and the closed-form references the experiment compares against.
struct Resolved {
  Bracket bracket{};
  BracketCalibration cal{};
  double nu = 0.0;
  bool calibrated = false;
  bool bracket_fixed = false;  // false only for per-replication SaaCompare
  std::optional<double> mu2, t_star, theta_star, sr_star, grad_oracle;
  double t0 = 0.0;
  double theta0 = 0.0;
};

std::vector<std::optional<double>> theta_probes(const ExperimentConfig& cfg) {
  if (cfg.model.kind != ModelKind::TwoAssetPortfolio) return {std::nullopt};
  if (cfg.experiment == ExperimentKind::OptimizeRate) {
    std::vector<std::optional<double>> ps;
    for (int i = 0; i < 9; ++i)
      ps.push_back(cfg.model.theta_lo +
                   (cfg.model.theta_hi - cfg.model.theta_lo) * i / 8.0);
    return ps;
  }
  return {cfg.theta};
}

Resolved resolve(const ExperimentConfig& cfg) {
  Resolved r;
  const bool portfolio = cfg.model.kind == ModelKind::TwoAssetPortfolio;
  const auto probes = theta_probes(cfg);
  const bool saa = cfg.experiment == ExperimentKind::SaaCompare;

  if (cfg.bracket) {
    r.bracket = *cfg.bracket;
    r.bracket_fixed = true;
  } else if (!saa) {
    // one pilot search per probe; the union straddles the root everywhere
    bool first = true;
    for (std::size_t j = 0; j < probes.size(); ++j) {
      RngStream rng(cfg.seed, kCalibStreamBase + j);
      const Bracket b = bracket_search(cfg.model, cfg.loss, cfg.lambda,
                                       cfg.pilot_m, rng, probes[j]);
      if (first) {
        r.bracket = b;
        first = false;
      } else {
        r.bracket.lo = std::min(r.bracket.lo, b.lo);
        r.bracket.hi = std::max(r.bracket.hi, b.hi);
      }
    }
    r.bracket_fixed = true;
  }

  if (r.bracket_fixed) {
    r.t0 = cfg.t0.value_or(r.bracket.midpoint());
    if (!r.bracket.contains(r.t0))
      throw ConfigError("t0=" + std::to_string(r.t0) +
                        " outside the resolved bracket [" +
                        std::to_string(r.bracket.lo) + ", " +
                        std::to_string(r.bracket.hi) + "]");
  }

  if (!saa) {
    bool first = true;
    for (std::size_t j = 0; j < probes.size(); ++j) {
      RngStream rng(cfg.seed, kCalibStreamBase + 16 + j);
      const BracketCalibration c =
          calibrate_on_bracket(cfg.model, cfg.loss, cfg.lambda, r.bracket,
                               probes[j], rng, 200000, cfg.clamp_k);
      const double nu_j = sub_gaussian_nu(cfg.model, probes[j]);
      if (first) {
        r.cal = c;
        r.nu = nu_j;
        first = false;
      } else {
        r.cal.mu1 = std::min(r.cal.mu1, c.mu1);
        r.cal.B = std::max(r.cal.B, c.B);
        r.cal.sigma2 = std::max(r.cal.sigma2, c.sigma2);
        r.cal.eta = std::min(r.cal.eta, c.eta);
        r.cal.L1 = std::max(r.cal.L1, c.L1);
        r.cal.L2 = std::max(r.cal.L2, c.L2);
        r.cal.arg_lo = std::min(r.cal.arg_lo, c.arg_lo);
        r.cal.arg_hi = std::max(r.cal.arg_hi, c.arg_hi);
        r.cal.closed_form = r.cal.closed_form && c.closed_form;
        r.nu = std::max(r.nu, nu_j);
      }
    }
    r.calibrated = true;
  }

  switch (cfg.experiment) {
    case ExperimentKind::EstimateRate:
    case ExperimentKind::EstimateHP:
      r.t_star = closed_form_sr(cfg.model, cfg.loss, cfg.lambda,
                                portfolio ? cfg.theta : std::nullopt);
      if (!r.t_star)
        throw OracleUnavailable(
            "estimation experiments need a closed-form root for this "
            "model/loss pairing");
      break;
    case ExperimentKind::GradientRate:
      r.grad_oracle =
          closed_form_sr_derivative(cfg.model, cfg.loss, cfg.lambda,
                                    *cfg.theta);
      if (!r.grad_oracle)
        throw OracleUnavailable(
            "gradient experiments need a closed-form risk derivative for "
            "this loss");
      break;
    case ExperimentKind::OptimizeRate:
      r.theta_star = closed_form_theta_star(cfg.model, cfg.loss);
      if (!r.theta_star)
        throw OracleUnavailable(
            "optimizer experiments need a closed-form minimizer for this "
            "model/loss pairing");
      r.sr_star = closed_form_sr(cfg.model, cfg.loss, cfg.lambda,
                                 *r.theta_star);
      r.mu2 = closed_form_sr_curvature(cfg.model, cfg.loss);
      r.theta0 =
          cfg.theta0.value_or(0.5 * (cfg.model.theta_lo + cfg.model.theta_hi));
      break;
    case ExperimentKind::SaaCompare:
      r.t_star = closed_form_sr(cfg.model, cfg.loss, cfg.lambda,
                                portfolio ? cfg.theta : std::nullopt);
      break;
  }
  return r;
}

enum class Mode { Tuned, Universal, None };

Mode bound_mode(const ExperimentConfig& cfg) {
  if (cfg.bound == "none") return Mode::None;
  if (cfg.bound == "tuned") return Mode::Tuned;
  if (cfg.bound == "universal") return Mode::Universal;
  return cfg.schedule.alpha == 1.0 ? Mode::Tuned : Mode::Universal;
}

// smallest index i >= 1 with lhs_coeff / i^alpha < rhs
std::int64_t first_index_below(double lhs_coeff, double alpha, double rhs) {
  std::int64_t i = 1;
  if (lhs_coeff >= rhs) {
    i = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(
               std::floor(std::pow(lhs_coeff / rhs, 1.0 / alpha))));
    while (lhs_coeff / std::pow(static_cast<double>(i), alpha) >= rhs) ++i;
  }
  return i;
}

BoundParams base_params(const ExperimentConfig& cfg, const Resolved& res,
                        double init_err2) {
  BoundParams p;
  p.mu1 = res.cal.mu1;
  p.mu2 = res.mu2.value_or(0.0);
  p.c = cfg.schedule.c;
  p.alpha = cfg.schedule.alpha;
  p.sigma2 = res.cal.sigma2;
  p.init_err2 = init_err2;
  p.B = res.cal.B;
  p.L1 = res.cal.L1;
  p.L2 = res.cal.L2;
  p.nu = res.nu;
  return p;
}

double mse_bound_at(const ExperimentConfig& cfg, const Resolved& res,
                    std::int64_t n, double init_err2) {
  switch (bound_mode(cfg)) {
    case Mode::None:
      return std::numeric_limits<double>::infinity();
    case Mode::Tuned: {
      BoundParams p = base_params(cfg, res, init_err2);
      return estimator_mse_bound_tuned(p, n);
    }
    case Mode::Universal: {
      BoundParams p = base_params(cfg, res, init_err2);
      p.n0 = first_index_below(p.mu1 * p.c, p.alpha, 1.0);
      return estimator_mse_bound_universal(
          p, n, p.alpha == 1.0 ? StepCase::Harmonic : StepCase::Polynomial);
    }
  }
  return std::numeric_limits<double>::infinity();
}

double hp_bound_at(const ExperimentConfig& cfg, const Resolved& res,
                   std::int64_t n, double init_err2) {
  switch (bound_mode(cfg)) {
    case Mode::None:
      return std::numeric_limits<double>::infinity();
    case Mode::Tuned: {
      BoundParams p = base_params(cfg, res, init_err2);
      return estimator_hp_bound_tuned(p, n, cfg.delta);
    }
    case Mode::Universal: {
      BoundParams p = base_params(cfg, res, init_err2);
      p.n0 = first_index_below(p.c * p.L1 * p.L1, p.alpha, p.mu1);
      return estimator_hp_bound_universal(p, n, cfg.delta);
    }
  }
  return std::numeric_limits<double>::infinity();
}

// Appends the row and recomputes the cumulative log-log slope (vs n, or vs m
// when x_is_m). Left blank until two rows exist or if any value is
// non-positive.
void push_with_slope(std::vector<RateRow>& rows, RateRow row, bool x_is_m) {
  rows.push_back(std::move(row));
  std::vector<RatePoint> pts;
  for (const auto& q : rows) {
    const auto& xi = x_is_m ? q.m : q.n;
    if (!xi || !(q.empirical_mse > 0.0)) return;
    pts.push_back({static_cast<double>(*xi), q.empirical_mse});
  }
  if (pts.size() < 2) return;
  if (pts.size() == 2)
    rows.back().slope_cum = two_point_slope(pts[0], pts[1]);
  else
    rows.back().slope_cum = fit_rate(pts).slope;
}

void run_estimate_sweep(const ExperimentConfig& cfg, const Resolved& res,
                        bool hp, std::vector<RateRow>& rows, json& measured) {
  const bool portfolio = cfg.model.kind == ModelKind::TwoAssetPortfolio;
  const double init_err2 =
      (res.t0 - *res.t_star) * (res.t0 - *res.t_star);
  const int R = cfg.replications;
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const std::int64_t n = cfg.n_grid[gi];
    std::vector<double> err(static_cast<std::size_t>(R));
    parallel_for(R, cfg.jobs, [&](std::int64_t i) {
      RngStream rng(cfg.seed, sweep_stream(gi, i));
      EstimatorConfig ec(cfg.loss, cfg.lambda, res.bracket, cfg.schedule,
                         res.t0);
      const double t =
          portfolio
              ? estimate_at_theta(cfg.model, *cfg.theta, ec, n, rng, n).final_t
              : estimate(cfg.model, ec, n, rng, n).final_t;
      err[static_cast<std::size_t>(i)] = t - *res.t_star;
    });
    RateRow row;
    row.n = n;
    row.replications = R;
    if (!hp) {
      std::vector<double> e2;
      e2.reserve(err.size());
      for (const double d : err) e2.push_back(d * d);
      const MeanSe ms = mean_se(e2);
      row.empirical_mse = ms.mean;
      row.stderr_ = ms.se;
      row.bound = mse_bound_at(cfg, res, n, init_err2);
    } else {
      std::vector<double> a;
      a.reserve(err.size());
      for (const double d : err) a.push_back(std::abs(d));
      std::sort(a.begin(), a.end());
      const int k = std::clamp(
          static_cast<int>(std::ceil((1.0 - cfg.delta) * R)), 1, R);
      const int off = std::max(
          1, static_cast<int>(
                 std::ceil(std::sqrt(R * cfg.delta * (1.0 - cfg.delta)))));
      const double q = a[static_cast<std::size_t>(k - 1)];
      const double q_hi = a[static_cast<std::size_t>(std::min(R, k + off) - 1)];
      const double q_lo = a[static_cast<std::size_t>(std::max(1, k - off) - 1)];
      row.empirical_mse = q;
      row.stderr_ = (q_hi - q_lo) / 2.0;
      row.bound = hp_bound_at(cfg, res, n, init_err2);
    }
    push_with_slope(rows, row, false);
  }
  measured["init_err2"] = init_err2;
}

void run_gradient_sweep(const ExperimentConfig& cfg, const Resolved& res,
                        std::vector<RateRow>& rows, json& measured) {
  const int R = cfg.replications;
  std::vector<double> mean_abs, mean_abs_se;
  std::vector<double> c4_cands, c5_cands;
  for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi) {
    const std::int64_t m = cfg.m_grid[gi];
    std::vector<double> err(static_cast<std::size_t>(R));
    parallel_for(R, cfg.jobs, [&](std::int64_t i) {
      RngStream rng(cfg.seed, sweep_stream(gi, i));
      EstimatorConfig ec(cfg.loss, cfg.lambda, res.bracket, cfg.schedule,
                         res.t0);
      const GradientEstimate g =
          estimate_gradient(cfg.model, *cfg.theta, m, ec, rng);
      err[static_cast<std::size_t>(i)] = g.value - *res.grad_oracle;
    });
    std::vector<double> e2, ea;
    e2.reserve(err.size());
    ea.reserve(err.size());
    for (const double d : err) {
      e2.push_back(d * d);
      ea.push_back(std::abs(d));
    }
    const MeanSe m2 = mean_se(e2);
    const MeanSe ma = mean_se(ea);
    mean_abs.push_back(ma.mean);
    mean_abs_se.push_back(ma.se);
    c5_cands.push_back((m2.mean + 3.0 * m2.se) * static_cast<double>(m));
    c4_cands.push_back((ma.mean + 3.0 * ma.se) *
                       std::sqrt(static_cast<double>(m)));
    RateRow row;
    row.m = m;
    row.replications = R;
    row.empirical_mse = m2.mean;
    row.stderr_ = m2.se;
    row.bound = 0.0;  // filled below once the envelope is known
    push_with_slope(rows, row, true);
  }
  const double c5_fit =
      cfg.c5 ? *cfg.c5 : *std::max_element(c5_cands.begin(), c5_cands.end());
  const double c4_fit =
      cfg.c4 ? *cfg.c4 : *std::max_element(c4_cands.begin(), c4_cands.end());
  const bool none = bound_mode(cfg) == Mode::None;
  for (auto& row : rows)
    row.bound = none ? std::numeric_limits<double>::infinity()
                     : c5_fit / static_cast<double>(*row.m);
  measured["c4_fit"] = c4_fit;
  measured["c5_fit"] = c5_fit;
  measured["mean_abs"] = mean_abs;
  measured["mean_abs_se"] = mean_abs_se;
  bool pos = true;
  std::vector<RatePoint> pts;
  for (std::size_t i = 0; i < mean_abs.size(); ++i) {
    if (!(mean_abs[i] > 0.0)) pos = false;
    pts.push_back({static_cast<double>(cfg.m_grid[i]), mean_abs[i]});
  }
  if (pos && pts.size() >= 3) {
    const RateFit f = fit_rate(pts);
    measured["mae_fit"] = {
        {"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
  }
}

void run_optimize_sweep(const ExperimentConfig& cfg, const Resolved& res,
                        std::vector<RateRow>& rows, json& measured) {
  const int R = cfg.replications;
  const double init_err2 =
      (res.theta0 - *res.theta_star) * (res.theta0 - *res.theta_star);
  const bool have_bound =
      bound_mode(cfg) != Mode::None && res.mu2 && cfg.c4 && cfg.c5;
  std::vector<double> gap_mean, gap_se;
  const bool have_gap = res.sr_star.has_value();
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const std::int64_t n = cfg.n_grid[gi];
    const std::int64_t m_n = batch_size(*cfg.batch, n);
    std::vector<double> err(static_cast<std::size_t>(R));
    std::vector<double> gap(static_cast<std::size_t>(R), 0.0);
    parallel_for(R, cfg.jobs, [&](std::int64_t i) {
      RngStream rng(cfg.seed, sweep_stream(gi, i));
      OptimizerConfig oc;
      oc.domain = {cfg.model.theta_lo, cfg.model.theta_hi};
      oc.theta0 = res.theta0;
      oc.schedule = cfg.schedule;
      oc.batch = *cfg.batch;
      oc.estimator = EstimatorConfig(cfg.loss, cfg.lambda, res.bracket,
                                     cfg.schedule, res.t0);
      const OptimizeResult o = optimize(cfg.model, oc, n, rng, n);
      err[static_cast<std::size_t>(i)] = o.final_theta - *res.theta_star;
      if (have_gap)
        gap[static_cast<std::size_t>(i)] =
            *closed_form_sr(cfg.model, cfg.loss, cfg.lambda, o.final_theta) -
            *res.sr_star;
    });
    std::vector<double> e2;
    e2.reserve(err.size());
    for (const double d : err) e2.push_back(d * d);
    const MeanSe ms = mean_se(e2);
    RateRow row;
    row.n = n;
    row.m = m_n;
    row.replications = R;
    row.empirical_mse = ms.mean;
    row.stderr_ = ms.se;
    if (have_bound) {
      BoundParams p = base_params(cfg, res, init_err2);
      p.mu2 = *res.mu2;
      row.bound = optimizer_mse_bound(p, n, m_n, *cfg.c4, *cfg.c5);
    } else {
      row.bound = std::numeric_limits<double>::infinity();
    }
    push_with_slope(rows, row, false);
    if (have_gap) {
      const MeanSe gs = mean_se(gap);
      gap_mean.push_back(gs.mean);
      gap_se.push_back(gs.se);
    }
  }
  measured["init_err2"] = init_err2;
  if (have_gap) {
    measured["sr_gap"] = gap_mean;
    measured["sr_gap_se"] = gap_se;
    bool pos = true;
    std::vector<RatePoint> pts;
    for (std::size_t i = 0; i < gap_mean.size(); ++i) {
      if (!(gap_mean[i] > 0.0)) pos = false;
      pts.push_back({static_cast<double>(cfg.n_grid[i]), gap_mean[i]});
    }
    if (pos && pts.size() >= 3) {
      const RateFit f = fit_rate(pts);
      measured["sr_gap_fit"] = {
          {"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
    }
  }
  if (!have_bound)
    measured["bound_note"] =
        "no optimizer bound: needs c4, c5 and a curvature constant";
}

void run_saa_compare(const ExperimentConfig& cfg, const Resolved& res,
                     std::vector<CompareRow>& rows) {
  const int R = cfg.replications;
  const std::int64_t n = cfg.n_grid.back();
  rows.resize(static_cast<std::size_t>(R));
  parallel_for(R, cfg.jobs, [&](std::int64_t rep) {
    RngStream rng(cfg.seed, sweep_stream(0, rep));
    std::vector<double> xis(static_cast<std::size_t>(n));
    for (auto& x : xis) x = draw_xi(cfg.model, cfg.theta, rng);

    const Bracket br =
        res.bracket_fixed
            ? res.bracket
            : bracket_search_on_samples(xis, cfg.loss, cfg.lambda);
    const double saa = saa_binary_search(xis, cfg.loss, cfg.lambda, br);

    // delta method: se(root) = se(g_hat at the root) / |empirical slope|
    const double h = 1e-4 * std::max(1.0, br.width());
    const double gp =
        (detail::empirical_g(xis, cfg.loss, cfg.lambda, saa + h) -
         detail::empirical_g(xis, cfg.loss, cfg.lambda, saa - h)) /
        (2.0 * h);
    const double se_g =
        detail::empirical_g_stderr(xis, cfg.loss, cfg.lambda, saa);
    const double se_root = std::abs(gp) > 1e-12
                               ? se_g / std::abs(gp)
                               : std::numeric_limits<double>::infinity();

    EstimatorConfig ec(cfg.loss, cfg.lambda, br, cfg.schedule,
                       cfg.t0.value_or(br.midpoint()));
    std::size_t idx = 0;
    const double sa =
        estimate_with([&] { return xis[idx++]; }, ec, n, n).final_t;

    CompareRow row;
    row.replication = static_cast<int>(rep);
    row.n = n;
    row.closed_form = res.t_star;
    row.sa_estimate = sa;
    row.saa_root = saa;
    row.saa_stderr = se_root;
    row.diff_sa_saa = std::abs(sa - saa);
    if (res.t_star) row.diff_saa_oracle = std::abs(saa - *res.t_star);
    rows[static_cast<std::size_t>(rep)] = row;
  });
}

std::string render_rates_csv(const ExperimentConfig& cfg,
                             const std::vector<RateRow>& rows) {
  std::string out = std::string(kRatesHeader) + "\n";
  const std::string name = experiment_kind_name(cfg.experiment);
  for (const auto& r : rows) {
    out += name;
    out += ',';
    if (r.n) out += fmt_int(*r.n);
    out += ',';
    if (r.m) out += fmt_int(*r.m);
    out += ',';
    out += fmt_int(r.replications);
    out += ',';
    out += fmt17(r.empirical_mse);
    out += ',';
    out += fmt17(r.stderr_);
    out += ',';
    out += fmt17(r.bound);
    out += ',';
    if (r.slope_cum) out += fmt17(*r.slope_cum);
    out += '\n';
  }
  return out;
}

std::string render_compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = std::string(kCompareHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt_int(r.replication);
    out += ',';
    out += fmt_int(r.n);
    out += ',';
    if (r.closed_form) out += fmt17(*r.closed_form);
    out += ',';
    out += fmt17(r.sa_estimate);
    out += ',';
    out += fmt17(r.saa_root);
    out += ',';
    out += fmt17(r.saa_stderr);
    out += ',';
    out += fmt17(r.diff_sa_saa);
    out += ',';
    if (r.diff_saa_oracle) out += fmt17(*r.diff_saa_oracle);
    out += '\n';
  }
  return out;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << content;
  if (!f) throw ConfigError("write failed for " + p.string());
}

std::string render_trajectory(const ExperimentConfig& cfg,
                              const Resolved& res) {
  const std::size_t gi = cfg.n_grid.size() - 1;
  const std::int64_t n = cfg.n_grid.back();
  RngStream rng(cfg.seed, sweep_stream(gi, 0));
  if (cfg.experiment == ExperimentKind::OptimizeRate) {
    OptimizerConfig oc;
    oc.domain = {cfg.model.theta_lo, cfg.model.theta_hi};
    oc.theta0 = res.theta0;
    oc.schedule = cfg.schedule;
    oc.batch = *cfg.batch;
    oc.estimator = EstimatorConfig(cfg.loss, cfg.lambda, res.bracket,
                                   cfg.schedule, res.t0);
    const OptimizeResult o = optimize(cfg.model, oc, n, rng, 0);
    std::string out = "replication,k,theta_k,grad,m\n";
    for (const auto& p : o.trajectory)
      out += "0," + fmt_int(p.k) + "," + fmt17(p.theta) + "," +
             fmt17(p.grad) + "," + fmt_int(p.m) + "\n";
    return out;
  }
  EstimatorConfig ec(cfg.loss, cfg.lambda, res.bracket, cfg.schedule, res.t0);
  const bool portfolio = cfg.model.kind == ModelKind::TwoAssetPortfolio;
  const EstimateResult e =
      portfolio ? estimate_at_theta(cfg.model, *cfg.theta, ec, n, rng, 0)
                : estimate(cfg.model, ec, n, rng, 0);
  std::string out = "replication,k,t_k\n";
  for (const auto& p : e.trajectory)
    out += "0," + fmt_int(p.k) + "," + fmt17(p.t) + "\n";
  return out;
}

// ---- config (de)serialization helpers ----

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError(std::string("unknown key '") + it.key() + "' in " +
                        where);
  }
}

std::int64_t as_int(const json& v, const char* what) {
  if (v.is_number_integer() || v.is_number_unsigned())
    return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    const auto r = static_cast<std::int64_t>(std::llround(d));
    if (std::abs(d - static_cast<double>(r)) < 1e-9) return r;
  }
  throw ConfigError(std::string(what) + " must be an integer");
}

double as_double(const json& v, const char* what) {
  if (!v.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return v.get<double>();
}

json model_to_json(const ModelSpec& m) {
  switch (m.kind) {
    case ModelKind::GaussianLoss:
      return {{"kind", "gaussian_loss"}, {"mean", m.mean}, {"stddev", m.stddev}};
    case ModelKind::TruncatedGaussianLoss:
      return {{"kind", "truncated_gaussian_loss"},
              {"mean", m.mean},
              {"stddev", m.stddev},
              {"clip", m.clip}};
    case ModelKind::TwoAssetPortfolio:
      return {{"kind", "two_asset"},
              {"m1", m.m1},
              {"m2", m.m2},
              {"s1", m.s1},
              {"s2", m.s2},
              {"theta_domain", {m.theta_lo, m.theta_hi}}};
  }
  throw ConfigError("model_to_json: unknown kind");
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("model needs a 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian_loss") {
    check_keys(j, {"kind", "mean", "stddev"}, "model");
    return gaussian_loss_model(as_double(j.at("mean"), "model.mean"),
                               as_double(j.at("stddev"), "model.stddev"));
  }
  if (kind == "truncated_gaussian_loss") {
    check_keys(j, {"kind", "mean", "stddev", "clip"}, "model");
    return truncated_gaussian_loss_model(
        as_double(j.at("mean"), "model.mean"),
        as_double(j.at("stddev"), "model.stddev"),
        as_double(j.at("clip"), "model.clip"));
  }
  if (kind == "two_asset") {
    check_keys(j, {"kind", "m1", "m2", "s1", "s2", "theta_domain"}, "model");
    double lo = 0.0, hi = 1.0;
    if (j.contains("theta_domain")) {
      const json& d = j.at("theta_domain");
      if (!d.is_array() || d.size() != 2)
        throw ConfigError("model.theta_domain must be [lo, hi]");
      lo = as_double(d[0], "model.theta_domain[0]");
      hi = as_double(d[1], "model.theta_domain[1]");
    }
    return two_asset_model(
        as_double(j.at("m1"), "model.m1"), as_double(j.at("m2"), "model.m2"),
        as_double(j.at("s1"), "model.s1"), as_double(j.at("s2"), "model.s2"),
        lo, hi);
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

json loss_to_json(const LossSpec& l) {
  switch (l.kind) {
    case LossKind::Identity:
      return {{"kind", "identity"}};
    case LossKind::Exponential:
      return {{"kind", "exponential"}, {"beta", l.beta}};
    case LossKind::PiecewisePolynomial:
      return {{"kind", "piecewise_polynomial"},
              {"threshold", l.threshold},
              {"degree", l.degree}};
  }
  throw ConfigError("loss_to_json: unknown kind");
}

LossSpec loss_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("loss needs a 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") {
    check_keys(j, {"kind"}, "loss");
    return identity_loss();
  }
  if (kind == "exponential") {
    check_keys(j, {"kind", "beta"}, "loss");
    return exponential_loss(
        j.contains("beta") ? as_double(j.at("beta"), "loss.beta") : 1.0);
  }
  if (kind == "piecewise_polynomial") {
    check_keys(j, {"kind", "threshold", "degree"}, "loss");
    return piecewise_polynomial_loss(
        j.contains("threshold") ? as_double(j.at("threshold"), "loss.threshold")
                                : 0.0,
        j.contains("degree")
            ? static_cast<int>(as_int(j.at("degree"), "loss.degree"))
            : 2);
  }
  throw ConfigError("unknown loss kind '" + kind + "'");
}

json batch_to_json(const BatchSpec& b) {
  if (b.kind == BatchSpec::Kind::Fixed)
    return {{"kind", "fixed"}, {"m", b.m}};
  return {{"kind", "horizon"}, {"rho", b.rho}};
}

BatchSpec batch_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("batch needs a 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") {
    check_keys(j, {"kind", "m"}, "batch");
    return fixed_batch(as_int(j.at("m"), "batch.m"));
  }
  if (kind == "horizon") {
    check_keys(j, {"kind", "rho"}, "batch");
    return horizon_batch(as_double(j.at("rho"), "batch.rho"));
  }
  throw ConfigError("unknown batch kind '" + kind + "'");
}

std::vector<std::int64_t> grid_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  std::vector<std::int64_t> out;
  for (const auto& v : j) out.push_back(as_int(v, what));
  return out;
}

void check_grid(const std::vector<std::int64_t>& g, const char* what) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 1)
      throw ConfigError(std::string(what) + " entries must be >= 1");
    if (i > 0 && g[i] <= g[i - 1])
      throw ConfigError(std::string(what) + " must be strictly increasing");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (replications < 2)
    throw ConfigError(
        "replications >= 2 required: the standard error needs at least two "
        "independent replications");
  if (!(schedule.c > 0.0)) throw ConfigError("schedule.c > 0 required");
  if (!(schedule.alpha > 0.0 && schedule.alpha <= 1.0))
    throw ConfigError("schedule.alpha in (0,1] required");
  if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
  if (pilot_m < 32) throw ConfigError("pilot_m >= 32 required");
  if (!(clamp_k > 0.0)) throw ConfigError("clamp_k > 0 required");
  if (jobs < 0) throw ConfigError("jobs >= 0 required");
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("delta in (0,1) required");
  if (bound != "auto" && bound != "tuned" && bound != "universal" &&
      bound != "none")
    throw ConfigError("bound must be auto, tuned, universal, or none");
  if (bound == "tuned" && schedule.alpha != 1.0)
    throw ConfigError("the tuned bound applies to alpha == 1 only");
  if (bracket && !(bracket->lo < bracket->hi))
    throw ConfigError("bracket lo < hi required");
  if (t0 && bracket && !bracket->contains(*t0))
    throw ConfigError("t0 must lie in the bracket");
  check_grid(n_grid, "n_grid");
  check_grid(m_grid, "m_grid");

  const bool portfolio = model.kind == ModelKind::TwoAssetPortfolio;
  if (portfolio && theta) require_theta(model, *theta);
  switch (experiment) {
    case ExperimentKind::EstimateRate:
    case ExperimentKind::EstimateHP:
      if (n_grid.empty()) throw ConfigError("n_grid required");
      if (portfolio && !theta)
        throw ConfigError("two-asset estimation needs theta");
      if (experiment == ExperimentKind::EstimateHP && bound == "universal" &&
          schedule.alpha == 1.0)
        throw ConfigError(
            "the universal high-probability bound needs alpha in (0,1); "
            "alpha == 1 uses the tuned bound");
      break;
    case ExperimentKind::GradientRate:
      if (m_grid.empty()) throw ConfigError("m_grid required");
      if (!portfolio)
        throw ConfigError("gradient experiments need the two-asset model");
      if (!theta) throw ConfigError("gradient experiments need theta");
      break;
    case ExperimentKind::OptimizeRate:
      if (n_grid.empty()) throw ConfigError("n_grid required");
      if (!portfolio)
        throw ConfigError("optimizer experiments need the two-asset model");
      if (!batch) throw ConfigError("optimizer experiments need a batch spec");
      if (schedule.alpha != 1.0)
        throw ConfigError("the optimizer step schedule must be c/k");
      if (theta0 && !(*theta0 >= model.theta_lo && *theta0 <= model.theta_hi))
        throw ConfigError("theta0 must lie in the theta domain");
      break;
    case ExperimentKind::SaaCompare:
      if (n_grid.empty()) throw ConfigError("n_grid required");
      if (portfolio && !theta)
        throw ConfigError("two-asset comparison needs theta");
      break;
  }
  if (batch) {
    if (batch->kind == BatchSpec::Kind::Fixed && batch->m < 1)
      throw ConfigError("batch.m >= 1 required");
    if (batch->kind == BatchSpec::Kind::Horizon &&
        !(batch->rho > 0.0 && batch->rho <= 1.0))
      throw ConfigError("batch.rho in (0,1] required");
  }
  if (c4 && !(*c4 >= 0.0)) throw ConfigError("c4 >= 0 required");
  if (c5 && !(*c5 >= 0.0)) throw ConfigError("c5 >= 0 required");
}

void to_json(json& j, const ExperimentConfig& cfg) {
  j = json{{"experiment", experiment_kind_name(cfg.experiment)},
           {"model", model_to_json(cfg.model)},
           {"loss", loss_to_json(cfg.loss)},
           {"lambda", cfg.lambda},
           {"schedule", {{"c", cfg.schedule.c}, {"alpha", cfg.schedule.alpha}}},
           {"replications", cfg.replications},
           {"seed", cfg.seed},
           {"delta", cfg.delta},
           {"pilot_m", cfg.pilot_m},
           {"bound", cfg.bound},
           {"clamp_k", cfg.clamp_k},
           {"output_dir", cfg.output_dir},
           {"jobs", cfg.jobs}};
  if (!cfg.n_grid.empty()) j["n_grid"] = cfg.n_grid;
  if (!cfg.m_grid.empty()) j["m_grid"] = cfg.m_grid;
  if (cfg.batch) j["batch"] = batch_to_json(*cfg.batch);
  if (cfg.bracket)
    j["bracket"] = {{"lo", cfg.bracket->lo}, {"hi", cfg.bracket->hi}};
  if (cfg.t0) j["t0"] = *cfg.t0;
  if (cfg.theta) j["theta"] = *cfg.theta;
  if (cfg.theta0) j["theta0"] = *cfg.theta0;
  if (cfg.c4) j["c4"] = *cfg.c4;
  if (cfg.c5) j["c5"] = *cfg.c5;
}

void from_json(const json& j, ExperimentConfig& cfg) {
  try {
    check_keys(j,
               {"experiment", "model", "loss", "lambda", "schedule", "n_grid",
                "m_grid", "replications", "seed", "delta", "batch", "bracket",
                "pilot_m", "t0", "theta", "theta0", "c4", "c5", "bound",
                "clamp_k", "output_dir", "jobs"},
               "config");
    for (const char* req : {"experiment", "model", "loss"})
      if (!j.contains(req))
        throw ConfigError(std::string("config needs '") + req + "'");
    cfg = ExperimentConfig{};
    cfg.experiment =
        parse_experiment_kind(j.at("experiment").get<std::string>());
    cfg.model = model_from_json(j.at("model"));
    cfg.loss = loss_from_json(j.at("loss"));
    if (j.contains("lambda")) cfg.lambda = as_double(j.at("lambda"), "lambda");
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      check_keys(s, {"c", "alpha"}, "schedule");
      if (s.contains("c")) cfg.schedule.c = as_double(s.at("c"), "schedule.c");
      if (s.contains("alpha"))
        cfg.schedule.alpha = as_double(s.at("alpha"), "schedule.alpha");
    }
    if (j.contains("n_grid")) cfg.n_grid = grid_from_json(j.at("n_grid"), "n_grid");
    if (j.contains("m_grid")) cfg.m_grid = grid_from_json(j.at("m_grid"), "m_grid");
    if (j.contains("replications"))
      cfg.replications =
          static_cast<int>(as_int(j.at("replications"), "replications"));
    if (j.contains("seed")) {
      const json& s = j.at("seed");
      if (s.is_number_unsigned())
        cfg.seed = s.get<std::uint64_t>();
      else
        cfg.seed = static_cast<std::uint64_t>(as_int(s, "seed"));
    }
    if (j.contains("delta")) cfg.delta = as_double(j.at("delta"), "delta");
    if (j.contains("batch")) cfg.batch = batch_from_json(j.at("batch"));
    if (j.contains("bracket")) {
      const json& b = j.at("bracket");
      check_keys(b, {"lo", "hi"}, "bracket");
      cfg.bracket = Bracket{as_double(b.at("lo"), "bracket.lo"),
                            as_double(b.at("hi"), "bracket.hi")};
    }
    if (j.contains("pilot_m")) cfg.pilot_m = as_int(j.at("pilot_m"), "pilot_m");
    if (j.contains("t0")) cfg.t0 = as_double(j.at("t0"), "t0");
    if (j.contains("theta")) cfg.theta = as_double(j.at("theta"), "theta");
    if (j.contains("theta0")) cfg.theta0 = as_double(j.at("theta0"), "theta0");
    if (j.contains("c4")) cfg.c4 = as_double(j.at("c4"), "c4");
    if (j.contains("c5")) cfg.c5 = as_double(j.at("c5"), "c5");
    if (j.contains("bound")) cfg.bound = j.at("bound").get<std::string>();
    if (j.contains("clamp_k")) cfg.clamp_k = as_double(j.at("clamp_k"), "clamp_k");
    if (j.contains("output_dir"))
      cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("jobs"))
      cfg.jobs = static_cast<int>(as_int(j.at("jobs"), "jobs"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return j.get<ExperimentConfig>();
}

ExperimentResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  const Resolved res = resolve(cfg);

  ExperimentResult out;
  json measured = json::object();
  if (res.bracket_fixed) {
    measured["bracket"] = {{"lo", res.bracket.lo}, {"hi", res.bracket.hi}};
    measured["t0"] = res.t0;
  } else {
    measured["bracket_policy"] = "per_replication";
  }
  if (res.calibrated) {
    measured["mu1"] = res.cal.mu1;
    measured["B"] = res.cal.B;
    measured["sigma2"] = res.cal.sigma2;
    measured["eta"] = res.cal.eta;
    measured["L1"] = res.cal.L1;
    measured["L2"] = res.cal.L2;
    measured["nu"] = res.nu;
    measured["arg_lo"] = res.cal.arg_lo;
    measured["arg_hi"] = res.cal.arg_hi;
    measured["closed_form_calibration"] = res.cal.closed_form;
    const Mode mode = bound_mode(cfg);
    measured["bound_mode"] = mode == Mode::Tuned      ? "tuned"
                             : mode == Mode::Universal ? "universal"
                                                       : "none";
  }
  if (res.t_star) measured["t_star"] = *res.t_star;
  if (res.theta_star) measured["theta_star"] = *res.theta_star;
  if (res.sr_star) measured["sr_star"] = *res.sr_star;
  if (res.grad_oracle) measured["grad_oracle"] = *res.grad_oracle;
  if (res.mu2) measured["mu2"] = *res.mu2;

  switch (cfg.experiment) {
    case ExperimentKind::EstimateRate:
      run_estimate_sweep(cfg, res, false, out.rows, measured);
      break;
    case ExperimentKind::EstimateHP:
      run_estimate_sweep(cfg, res, true, out.rows, measured);
      break;
    case ExperimentKind::GradientRate:
      run_gradient_sweep(cfg, res, out.rows, measured);
      break;
    case ExperimentKind::OptimizeRate:
      run_optimize_sweep(cfg, res, out.rows, measured);
      break;
    case ExperimentKind::SaaCompare:
      run_saa_compare(cfg, res, out.compare);
      break;
  }

  if (!out.rows.empty() && out.rows.back().slope_cum &&
      cfg.experiment != ExperimentKind::SaaCompare) {
    measured["final_slope"] = *out.rows.back().slope_cum;
  }

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const json jcfg = cfg;
  write_file(dir / "config.json", jcfg.dump(2) + "\n");

  const bool compare_kind = cfg.experiment == ExperimentKind::SaaCompare;
  const std::string csv =
      compare_kind ? render_compare_csv(out.compare)
                   : render_rates_csv(cfg, out.rows);
  const std::string csv_name = compare_kind ? "compare.csv" : "rates.csv";
  write_file(dir / csv_name, csv);

  if (cfg.experiment == ExperimentKind::EstimateRate ||
      cfg.experiment == ExperimentKind::EstimateHP ||
      cfg.experiment == ExperimentKind::OptimizeRate) {
    write_file(dir / "trajectory.csv", render_trajectory(cfg, res));
  }

  json meta = {{"config", jcfg},
               {"measured", measured},
               {"csv", {{"file", csv_name}, {"sha1", sha1_hex(csv)}}}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  out.measured = measured;
  out.csv_path = (dir / csv_name).string();
  out.meta_path = (dir / "meta.json").string();
  return out;
}

namespace {

double parse_field_double(const std::string& s, std::size_t row,
                          const char* what) {
  const char* p = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(p, &end);
  if (end == p || *end != '\0')
    throw SchemaMismatch("row " + std::to_string(row) + ": field '" + what +
                         "' is not a number: '" + s + "'");
  return v;
}

}  // namespace

BoundsReport compare_bounds(const std::string& rates_csv_path) {
  std::ifstream in(rates_csv_path);
  if (!in) throw ConfigError("cannot open " + rates_csv_path);
  std::string header;
  if (!std::getline(in, header))
    throw SchemaMismatch("empty csv " + rates_csv_path);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != kRatesHeader)
    throw SchemaMismatch("rates csv header mismatch: got '" + header + "'");

  BoundsReport report;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 8)
      throw SchemaMismatch("row " + std::to_string(row) + ": expected 8 "
                           "fields, got " + std::to_string(fields.size()));
    const double mse = parse_field_double(fields[4], row, "empirical_mse");
    const double se = parse_field_double(fields[5], row, "stderr");
    const double bound = parse_field_double(fields[6], row, "bound");
    BoundCheck chk;
    chk.row = row;
    chk.lhs = mse + 3.0 * se;
    chk.bound = bound;
    chk.pass = chk.lhs <= bound;  // an inf bound always passes
    report.all_pass = report.all_pass && chk.pass;
    report.checks.push_back(chk);
    ++row;
  }
  return report;
}

}  // namespace shortfall
