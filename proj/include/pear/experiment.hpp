#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pear/train.hpp"

namespace pear {

/// One experiment: a task/method pair trained per seed under the training
/// constraint, then evaluated on the base problem and every shift variant.
struct ExperimentConfig {
  std::string task = "shortest_path";  // shortest_path | knapsack | mvo_synthetic
  std::string method = "pear";         // pear | mse | spo_plus
  int deg = 2;
  double noise = 0.0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  double lambda_smooth = 0.1;
  double beta = 0.1;
  std::string shift;  // "", "cross", "rho=0.3,0.7", "lb=-0.1,-0.3"
  std::string out = "results.csv";
  double max_seconds = 600.0;
  double capacity_ratio = 0.5;  // knapsack training capacity
  int mvo_assets = 10;

  std::string echo() const;
};

struct ResultRow {
  std::string task;
  std::string method;
  int deg = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string shift = "base";
  double regret_pct = 0.0;
  double train_mse = 0.0;
  double wall_seconds = 0.0;
  std::string stop_reason;

  std::string csv() const;
  static const char* csv_header();
};

struct SeedOutcome {
  std::vector<ResultRow> rows;  // base first, then one per shift tag
  LinearModel model;
  bool failed = false;
  std::string error;
};

/// Splits "rho=0.3,0.7" style shift specs into per-variant tags.
std::vector<std::string> parse_shift_tags(const std::string& spec);

/// Trains one seed and evaluates base + shifts; never retrains for shifts.
SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// All seeds, executed in parallel, rows merged in seed order. Per-seed
/// failures become rows with an error stop reason; the run continues.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

void append_results(const std::string& path, const std::vector<ResultRow>& rows);
void write_config_echo(const ExperimentConfig& cfg, const std::string& results_path);

struct AggregateRow {
  std::string task, method, shift;
  int deg = 0;
  double noise = 0.0;
  int seeds = 0;
  double regret_mean = 0.0, regret_std = 0.0;
  double time_mean = 0.0, time_std = 0.0;
};

/// Mean and sample standard deviation across seeds, grouped by
/// (task, method, deg, noise, shift).
std::vector<AggregateRow> aggregate_results(const std::vector<std::string>& result_files);
void write_aggregate(const std::vector<AggregateRow>& rows, const std::string& path);

/// Builds the task for a config (base or one shift tag) at a given seed.
Task build_task(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& shift_tag);

/// Dataset sized for the config's task.
Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

/// Training configuration with per-task defaults applied.
TrainConfig build_train_config(const ExperimentConfig& cfg);

}  // namespace pear
