#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shortfall/acceptance.hpp"
#include "shortfall/errors.hpp"
#include "shortfall/experiments.hpp"

namespace {

using nlohmann::json;
using namespace shortfall;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string out;
  bool hp = false;

  double lambda = 0, c = 0, alpha = 0, delta = 0, theta = 0, theta0 = 0,
         t0 = 0, c4 = 0, c5 = 0, clamp_k = 0, bracket_lo = 0, bracket_hi = 0,
         batch_rho = 0;
  std::int64_t replications = 0, pilot_m = 0, batch_m = 0;
  std::vector<std::int64_t> n_grid, m_grid;
  std::string bound;

  CLI::Option *o_jobs = nullptr, *o_out = nullptr, *o_lambda = nullptr,
              *o_c = nullptr, *o_alpha = nullptr, *o_delta = nullptr,
              *o_theta = nullptr, *o_theta0 = nullptr, *o_t0 = nullptr,
              *o_c4 = nullptr, *o_c5 = nullptr, *o_clamp_k = nullptr,
              *o_blo = nullptr, *o_bhi = nullptr, *o_rho = nullptr,
              *o_reps = nullptr, *o_pilot = nullptr, *o_bm = nullptr,
              *o_ngrid = nullptr, *o_mgrid = nullptr, *o_bound = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "JSON experiment config")
      ->required();
  sub->add_option("--seed", o.seed, "master RNG seed (required)")->required();
  o.o_jobs = sub->add_option("--jobs", o.jobs,
                             "worker threads (0 = all cores)");
  o.o_out = sub->add_option("--out", o.out, "output directory");
  o.o_lambda = sub->add_option("--lambda", o.lambda, "risk threshold");
  o.o_c = sub->add_option("--c", o.c, "step-size constant");
  o.o_alpha = sub->add_option("--alpha", o.alpha, "step-size exponent");
  o.o_ngrid = sub->add_option("--n-grid", o.n_grid, "iteration grid")
                  ->delimiter(',');
  o.o_mgrid = sub->add_option("--m-grid", o.m_grid, "batch grid")
                  ->delimiter(',');
  o.o_reps = sub->add_option("--replications", o.replications,
                             "independent replications");
  o.o_delta = sub->add_option("--delta", o.delta, "tail probability");
  o.o_pilot = sub->add_option("--pilot-m", o.pilot_m,
                              "pilot samples for bracket search");
  o.o_theta = sub->add_option("--theta", o.theta, "portfolio weight");
  o.o_theta0 = sub->add_option("--theta0", o.theta0, "initial weight");
  o.o_t0 = sub->add_option("--t0", o.t0, "initial root iterate");
  o.o_c4 = sub->add_option("--c4", o.c4, "gradient bias constant");
  o.o_c5 = sub->add_option("--c5", o.c5, "gradient moment constant");
  o.o_bound = sub->add_option("--bound", o.bound,
                              "bound mode: auto|tuned|universal|none");
  o.o_clamp_k = sub->add_option("--clamp-k", o.clamp_k,
                                "calibration support half-width in sds");
  o.o_blo = sub->add_option("--bracket-lo", o.bracket_lo, "bracket lower end");
  o.o_bhi = sub->add_option("--bracket-hi", o.bracket_hi, "bracket upper end");
  o.o_bm = sub->add_option("--batch-m", o.batch_m, "fixed gradient batch");
  o.o_rho = sub->add_option("--batch-rho", o.batch_rho,
                            "horizon-scaled batch exponent");
}

ExperimentConfig build_config(const CommonOpts& o, ExperimentKind kind) {
  std::ifstream f(o.config_path);
  if (!f) throw ConfigError("cannot open config: " + o.config_path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  const bool had_out = j.contains("output_dir");
  // The subcommand names the experiment; a conflicting key in the file is
  // overridden, like any other flag-level override.
  j["experiment"] = experiment_kind_name(kind);
  ExperimentConfig cfg = j.get<ExperimentConfig>();

  cfg.seed = o.seed;
  if (*o.o_jobs) cfg.jobs = o.jobs;
  if (*o.o_lambda) cfg.lambda = o.lambda;
  if (*o.o_c) cfg.schedule.c = o.c;
  if (*o.o_alpha) cfg.schedule.alpha = o.alpha;
  if (*o.o_ngrid) cfg.n_grid = o.n_grid;
  if (*o.o_mgrid) cfg.m_grid = o.m_grid;
  if (*o.o_reps) cfg.replications = static_cast<int>(o.replications);
  if (*o.o_delta) cfg.delta = o.delta;
  if (*o.o_pilot) cfg.pilot_m = o.pilot_m;
  if (*o.o_theta) cfg.theta = o.theta;
  if (*o.o_theta0) cfg.theta0 = o.theta0;
  if (*o.o_t0) cfg.t0 = o.t0;
  if (*o.o_c4) cfg.c4 = o.c4;
  if (*o.o_c5) cfg.c5 = o.c5;
  if (*o.o_bound) cfg.bound = o.bound;
  if (*o.o_clamp_k) cfg.clamp_k = o.clamp_k;
  if (*o.o_blo || *o.o_bhi) {
    Bracket br = cfg.bracket ? *cfg.bracket : Bracket{0.0, 1.0};
    if (!cfg.bracket && !(*o.o_blo && *o.o_bhi))
      throw ConfigError(
          "--bracket-lo and --bracket-hi must both be given when the config "
          "has no bracket");
    if (*o.o_blo) br.lo = o.bracket_lo;
    if (*o.o_bhi) br.hi = o.bracket_hi;
    cfg.bracket = br;
  }
  if (*o.o_bm && *o.o_rho)
    throw ConfigError("--batch-m and --batch-rho are mutually exclusive");
  if (*o.o_bm) cfg.batch = fixed_batch(o.batch_m);
  if (*o.o_rho) cfg.batch = horizon_batch(o.batch_rho);

  if (*o.o_out) {
    cfg.output_dir = o.out;
  } else if (!had_out) {
    if (const char* env = std::getenv("SHORTFALL_OUT"))
      cfg.output_dir = env;
    else
      cfg.output_dir = ".";
  }
  return cfg;
}

int run_experiment(const CommonOpts& o, ExperimentKind kind) {
  const ExperimentConfig cfg = build_config(o, kind);
  const ExperimentResult res = shortfall::run(cfg);
  std::cout << "wrote " << res.csv_path << "\n";
  std::cout << "wrote " << res.meta_path << "\n";
  if (res.measured.contains("final_slope"))
    std::cout << "fitted log-log slope: "
              << res.measured["final_slope"].get<double>() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online shortfall-risk estimation and optimization runner"};
  app.require_subcommand(1);

  CommonOpts oe, oo, og, os;
  auto* est = app.add_subcommand(
      "estimate", "root-estimation rate sweep against the closed form");
  add_common(est, oe);
  est->add_flag("--hp", oe.hp,
                "measure the high-probability quantile instead of the MSE");
  auto* opt = app.add_subcommand(
      "optimize", "projected-SGD weight optimization rate sweep");
  add_common(opt, oo);
  auto* grad = app.add_subcommand(
      "gradient", "batched gradient-estimate error sweep");
  add_common(grad, og);
  auto* saa = app.add_subcommand(
      "saa-compare", "recursive estimate vs sample-average bisection");
  add_common(saa, os);

  auto* acc = app.add_subcommand("acceptance", "run the full acceptance gate");
  std::uint64_t acc_seed = 0;
  int acc_jobs = 0;
  std::string acc_out;
  acc->add_option("--seed", acc_seed, "master RNG seed (required)")
      ->required();
  acc->add_option("--jobs", acc_jobs, "worker threads (0 = all cores)");
  acc->add_option("--out", acc_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (est->parsed())
      return run_experiment(oe, oe.hp ? ExperimentKind::EstimateHP
                                      : ExperimentKind::EstimateRate);
    if (opt->parsed()) return run_experiment(oo, ExperimentKind::OptimizeRate);
    if (grad->parsed())
      return run_experiment(og, ExperimentKind::GradientRate);
    if (saa->parsed()) return run_experiment(os, ExperimentKind::SaaCompare);
    if (acc->parsed()) {
      if (acc_out.empty()) {
        if (const char* env = std::getenv("SHORTFALL_OUT"))
          acc_out = env;
        else
          acc_out = "acceptance_out";
      }
      const auto report =
          shortfall::run_acceptance(acc_seed, acc_jobs, acc_out, std::cout);
      return report.all_pass ? 0 : 1;
    }
  } catch (const RegimeViolation& e) {
    std::cerr << "regime violation: " << e.what() << "\n";
    return 4;
  } catch (const OracleUnavailable& e) {
    std::cerr << "oracle unavailable: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
