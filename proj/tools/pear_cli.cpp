#include <CLI11.hpp>
#include <iostream>

#include "pear/experiment.hpp"
#include "pear/verify_suites.hpp"

namespace {

struct CommonOpts {
  pear::ExperimentConfig cfg;
  std::string seeds_csv = "0,1,2,3,4";
};

void add_experiment_flags(CLI::App* app, CommonOpts& opts) {
  app->add_option("--task", opts.cfg.task, "shortest_path | knapsack | mvo_synthetic");
  app->add_option("--method", opts.cfg.method, "pear | mse | spo_plus");
  app->add_option("--deg", opts.cfg.deg, "polynomial degree of the cost mapping");
  app->add_option("--noise", opts.cfg.noise, "multiplicative noise half-width");
  app->add_option("--seeds", opts.seeds_csv, "comma-separated seed list");
  app->add_option("--lambda", opts.cfg.lambda_smooth, "quadratic smoothing strength");
  app->add_option("--beta", opts.cfg.beta, "normal injection strength");
  app->add_option("--shift", opts.cfg.shift, "cross | rho=...[,...] | lb=...[,...]");
  app->add_option("--out", opts.cfg.out, "results file (CSV, appended)");
  app->add_option("--max-seconds", opts.cfg.max_seconds, "wall-clock training cap per seed");
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) seeds.push_back(std::stoull(cell));
  }
  return seeds;
}

int do_run(const pear::ExperimentConfig& cfg) {
  const auto rows = pear::run_experiment(cfg);
  pear::append_results(cfg.out, rows);
  pear::write_config_echo(cfg, cfg.out);
  bool any_error = false;
  for (const auto& r : rows) {
    std::cout << r.csv() << "\n";
    any_error = any_error || r.stop_reason.rfind("error", 0) == 0;
  }
  return any_error ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-focused learning benchmarks with projected-error regret gradients"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "train and evaluate one configuration");
  add_experiment_flags(run_cmd, run_opts);

  CommonOpts sweep_opts;
  std::string sweep_axis = "beta";
  std::string sweep_values;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "cross one axis against all seeds");
  add_experiment_flags(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--axis", sweep_axis, "beta | lambda | degree | noise")->required();
  sweep_cmd->add_option("--values", sweep_values,
                        "comma-separated axis values (defaults per axis)");

  pear::GenConfig gen_cfg;
  std::string gen_task = "shortest_path";
  std::string gen_out = "dataset.csv";
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate and save a synthetic dataset");
  gen_cmd->add_option("--task", gen_task, "task that sizes the cost dimension");
  gen_cmd->add_option("--deg", gen_cfg.deg, "polynomial degree");
  gen_cmd->add_option("--noise", gen_cfg.noise_half_width, "noise half-width");
  gen_cmd->add_option("--seed", gen_cfg.seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output path");

  std::vector<std::string> agg_inputs;
  std::string agg_out = "aggregate.csv";
  CLI::App* agg_cmd = app.add_subcommand("aggregate", "mean/std across seeds from result files");
  agg_cmd->add_option("--in", agg_inputs, "result files")->required();
  agg_cmd->add_option("--out", agg_out, "aggregate output path");

  std::uint64_t verify_seed = 0;
  std::string verify_out = "verification.csv";
  bool canary = false;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the numerical verification suite");
  verify_cmd->add_option("--seed", verify_seed, "suite seed");
  verify_cmd->add_option("--out", verify_out, "report path");
  verify_cmd->add_flag("--canary", canary,
                       "flip a sign in the reduced-system recovery; the suite must fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      run_opts.cfg.seeds = parse_seeds(run_opts.seeds_csv);
      return do_run(run_opts.cfg);
    }
    if (sweep_cmd->parsed()) {
      sweep_opts.cfg.seeds = parse_seeds(sweep_opts.seeds_csv);
      std::vector<double> values;
      if (!sweep_values.empty()) {
        std::stringstream ss(sweep_values);
        std::string cell;
        while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
      } else if (sweep_axis == "beta") {
        values = {0.0, 0.05, 0.1, 0.2, 0.5};
      } else if (sweep_axis == "lambda") {
        values = {0.01, 0.05, 0.1, 0.5, 1.0};
      } else if (sweep_axis == "degree") {
        values = {2, 4, 6, 8};
      } else if (sweep_axis == "noise") {
        values = {0.1, 0.3, 0.5};
      } else {
        std::cerr << "unknown sweep axis: " << sweep_axis << "\n";
        return 1;
      }
      int rc = 0;
      for (double v : values) {
        pear::ExperimentConfig cfg = sweep_opts.cfg;
        if (sweep_axis == "beta") cfg.beta = v;
        if (sweep_axis == "lambda") cfg.lambda_smooth = v;
        if (sweep_axis == "degree") cfg.deg = static_cast<int>(v);
        if (sweep_axis == "noise") cfg.noise = v;
        rc |= do_run(cfg);
      }
      return rc;
    }
    if (gen_cmd->parsed()) {
      pear::ExperimentConfig sized;
      sized.task = gen_task;
      gen_cfg.d = pear::build_dataset(sized, gen_cfg.seed).config.d;
      pear::save_dataset(pear::generate(gen_cfg), gen_out);
      std::cout << "wrote " << gen_out << "\n";
      return 0;
    }
    if (agg_cmd->parsed()) {
      pear::write_aggregate(pear::aggregate_results(agg_inputs), agg_out);
      std::cout << "wrote " << agg_out << "\n";
      return 0;
    }
    if (verify_cmd->parsed()) {
      const auto reports = pear::run_default_suite(verify_seed, canary);
      const bool all_pass = pear::write_reports(reports, verify_out);
      for (const auto& r : reports) std::cout << r.line() << "\n";
      return all_pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
