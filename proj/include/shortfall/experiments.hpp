#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shortfall/bounds.hpp"
#include "shortfall/estimator.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/models.hpp"
#include "shortfall/optimizer.hpp"

namespace shortfall {

enum class ExperimentKind {
  EstimateRate,   // MSE of the root estimator over n_grid
  EstimateHP,     // (1-delta) quantile of |t_n - t*| over n_grid
  GradientRate,   // gradient error decay over m_grid at a fixed theta
  OptimizeRate,   // MSE of theta_n over n_grid
  SaaCompare      // per-replication SA vs SAA vs closed form
};

std::string experiment_kind_name(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::EstimateRate;
  ModelSpec model;
  LossSpec loss;
  double lambda = 1.0;
  StepSchedule schedule;
  std::vector<std::int64_t> n_grid;
  std::vector<std::int64_t> m_grid;  // gradient experiments only
  int replications = 2;
  std::uint64_t seed = 0;
  double delta = 0.05;
  std::optional<BatchSpec> batch;    // optimizer experiments
  std::optional<Bracket> bracket;    // absent -> pilot bracket_search
  std::int64_t pilot_m = 10000;
  std::optional<double> t0;          // absent -> bracket midpoint
  std::optional<double> theta;       // gradient / portfolio estimation
  std::optional<double> theta0;      // absent -> domain midpoint
  std::optional<double> c4, c5;      // optimizer bound inputs, else unbounded
  std::string bound = "auto";        // auto | tuned | universal | none
  double clamp_k = 6.0;              // xi range half-width, in stddevs
  std::string output_dir = ".";
  int jobs = 0;                      // 0 -> hardware concurrency

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// One row of rates.csv. `empirical_mse` is the experiment's primary error
// statistic against the closed-form reference: mean squared error for the
// rate experiments, the (1-delta) quantile of |error| for EstimateHP.
// `slope_cum` is the log-log OLS slope over the rows so far (vs n, or vs m
// for gradient sweeps); blank on the first row, two-point on the second.
struct RateRow {
  std::optional<std::int64_t> n;
  std::optional<std::int64_t> m;
  int replications = 0;
  double empirical_mse = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;
  std::optional<double> slope_cum;
};

// One row of compare.csv (SaaCompare). Oracle-dependent fields are blank
// when no closed form exists for the configuration.
struct CompareRow {
  int replication = 0;
  std::int64_t n = 0;
  std::optional<double> closed_form;
  double sa_estimate = 0.0;
  double saa_root = 0.0;
  double saa_stderr = 0.0;
  double diff_sa_saa = 0.0;
  std::optional<double> diff_saa_oracle;
};

struct ExperimentResult {
  std::vector<RateRow> rows;        // empty for SaaCompare
  std::vector<CompareRow> compare;  // SaaCompare only
  nlohmann::json measured;          // calibration constants, oracles, fits
  std::string csv_path;             // rates.csv or compare.csv
  std::string meta_path;
};

// Runs the configured experiment and writes config.json, rates.csv (or
// compare.csv), meta.json, and a trajectory.csv replay of replication 0 at
// the largest grid point (estimation and optimization kinds) under
// cfg.output_dir. Deterministic: a rerun reproduces every file byte for
// byte.
ExperimentResult run(const ExperimentConfig& cfg);

struct BoundCheck {
  std::size_t row = 0;  // 0-based data row index
  double lhs = 0.0;     // empirical_mse + 3 * stderr
  double bound = 0.0;
  bool pass = false;
};

struct BoundsReport {
  std::vector<BoundCheck> checks;
  bool all_pass = true;
};

// Re-reads a rates.csv and checks empirical_mse + 3*stderr <= bound per row.
// An `inf` bound passes by convention (no usable bound for that row).
BoundsReport compare_bounds(const std::string& rates_csv_path);

}  // namespace shortfall
