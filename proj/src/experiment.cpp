#include "pear/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <thread>

namespace pear {

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(std::stod(cell));
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "task = " << task << "\n";
  os << "method = " << method << "\n";
  os << "deg = " << deg << "\n";
  os << "noise = " << noise << "\n";
  os << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << "\n";
  os << "lambda = " << lambda_smooth << "\n";
  os << "beta = " << beta << "\n";
  os << "shift = " << shift << "\n";
  os << "out = " << out << "\n";
  os << "max_seconds = " << max_seconds << "\n";
  os << "capacity_ratio = " << capacity_ratio << "\n";
  os << "mvo_assets = " << mvo_assets << "\n";
  return os.str();
}

const char* ResultRow::csv_header() {
  return "task,method,deg,noise,seed,shift,regret_pct,train_mse,wall_seconds,stop_reason";
}

std::string ResultRow::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << task << "," << method << "," << deg << "," << noise << "," << seed << "," << shift
     << "," << regret_pct << "," << train_mse << "," << wall_seconds << "," << stop_reason;
  return os.str();
}

std::vector<std::string> parse_shift_tags(const std::string& spec) {
  std::vector<std::string> tags;
  if (spec.empty()) return tags;
  if (spec == "cross") {
    tags.push_back("cross");
    return tags;
  }
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("unrecognized shift spec: " + spec);
  }
  const std::string key = spec.substr(0, eq);
  if (key != "rho" && key != "lb") {
    throw std::invalid_argument("unrecognized shift axis: " + key);
  }
  for (double v : parse_list(spec.substr(eq + 1))) {
    tags.push_back(key + "=" + format_double(v));
  }
  return tags;
}

Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  GenConfig gen;
  gen.seed = seed;
  gen.deg = cfg.deg;
  gen.noise_half_width = cfg.noise;
  if (cfg.task == "shortest_path") {
    GridPathProblem p;
    gen.d = p.edge_count();
  } else if (cfg.task == "knapsack") {
    gen.d = 100;
  } else if (cfg.task == "mvo_synthetic") {
    gen.d = cfg.mvo_assets;
  } else {
    throw std::invalid_argument("unknown task: " + cfg.task);
  }
  return generate(gen);
}

Task build_task(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& shift_tag) {
  if (cfg.task == "shortest_path") {
    GridPathProblem p;
    if (shift_tag == "cross") {
      p.orientation = GridPathProblem::Orientation::Cross;
    } else if (!shift_tag.empty() && shift_tag != "base") {
      throw std::invalid_argument("shortest_path shift must be 'cross', got " + shift_tag);
    }
    return make_grid_task(p, cfg.lambda_smooth);
  }
  if (cfg.task == "knapsack") {
    double rho = cfg.capacity_ratio;
    if (!shift_tag.empty() && shift_tag != "base") {
      if (shift_tag.rfind("rho=", 0) != 0) {
        throw std::invalid_argument("knapsack shift must be 'rho=...', got " + shift_tag);
      }
      rho = std::stod(shift_tag.substr(4));
    }
    // Weights are drawn once per seed and shared by every capacity variant.
    return make_knapsack_task(KnapsackProblem::random(100, rho, seed), cfg.lambda_smooth);
  }
  if (cfg.task == "mvo_synthetic") {
    double lb = 0.0;
    if (!shift_tag.empty() && shift_tag != "base") {
      if (shift_tag.rfind("lb=", 0) != 0) {
        throw std::invalid_argument("mvo shift must be 'lb=...', got " + shift_tag);
      }
      lb = std::stod(shift_tag.substr(3));
    }
    return make_mvo_task(MvoProblem::random(cfg.mvo_assets, seed, lb));
  }
  throw std::invalid_argument("unknown task: " + cfg.task);
}

TrainConfig build_train_config(const ExperimentConfig& cfg) {
  TrainConfig tc;
  if (cfg.method == "pear") {
    tc.loss = LossKind::Pear;
  } else if (cfg.method == "mse") {
    tc.loss = LossKind::Mse;
  } else if (cfg.method == "spo_plus") {
    tc.loss = LossKind::SpoPlus;
  } else {
    throw std::invalid_argument("unknown method: " + cfg.method);
  }
  tc.lambda_smooth = cfg.lambda_smooth;
  tc.beta = cfg.beta;
  tc.max_seconds = cfg.max_seconds;
  if (cfg.task == "mvo_synthetic") {
    tc.lr = 1e-3;
    tc.batch = 64;
    tc.patience = 10;
    tc.reduce_on_plateau = true;
  } else {
    tc.lr = 1e-2;
    tc.batch = 32;
  }
  return tc;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  ResultRow proto;
  proto.task = cfg.task;
  proto.method = cfg.method;
  proto.deg = cfg.deg;
  proto.noise = cfg.noise;
  proto.seed = seed;

  try {
    const Dataset data = build_dataset(cfg, seed);
    const Splits sp = split(data);
    const Task task = build_task(cfg, seed, "base");
    const TrainConfig tc = build_train_config(cfg);

    const FitResult fitted = fit(task, data, sp.train, sp.val, tc);
    out.model = fitted.model;

    ResultRow base = proto;
    base.shift = "base";
    base.regret_pct = normalized_regret(fitted.model, task, data, sp.test);
    base.train_mse = mean_squared_error(fitted.model, data, sp.train);
    base.wall_seconds = fitted.history.wall_seconds;
    base.stop_reason = to_string(fitted.history.stop);
    out.rows.push_back(base);

    for (const std::string& tag : parse_shift_tags(cfg.shift)) {
      const Task shifted = build_task(cfg, seed, tag);
      ResultRow row = base;
      row.shift = tag;
      row.regret_pct = normalized_regret(fitted.model, shifted, data, sp.test);
      out.rows.push_back(row);
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
    ResultRow row = proto;
    row.shift = "base";
    row.regret_pct = std::nan("");
    row.stop_reason = std::string("error: ") + e.what();
    out.rows.push_back(row);
  }
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(cfg.seeds.size())));
  std::vector<std::future<SeedOutcome>> futures;
  futures.reserve(cfg.seeds.size());
  if (workers <= 1) {
    std::vector<ResultRow> rows;
    for (std::uint64_t seed : cfg.seeds) {
      const SeedOutcome o = run_seed(cfg, seed);
      rows.insert(rows.end(), o.rows.begin(), o.rows.end());
    }
    return rows;
  }
  for (std::uint64_t seed : cfg.seeds) {
    futures.push_back(
        std::async(std::launch::async, [&cfg, seed] { return run_seed(cfg, seed); }));
  }
  std::vector<ResultRow> rows;  // merged in seed order for deterministic output
  for (auto& f : futures) {
    const SeedOutcome o = f.get();
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
  }
  return rows;
}

void append_results(const std::string& path, const std::vector<ResultRow>& rows) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("append_results: cannot open " + path);
  if (fresh) out << ResultRow::csv_header() << "\n";
  for (const auto& r : rows) out << r.csv() << "\n";
}

void write_config_echo(const ExperimentConfig& cfg, const std::string& results_path) {
  std::ofstream out(results_path + ".config");
  if (!out) throw std::runtime_error("write_config_echo: cannot open sidecar");
  out << "pear-config v1\n" << cfg.echo();
}

std::vector<AggregateRow> aggregate_results(const std::vector<std::string>& result_files) {
  struct Acc {
    std::vector<double> regret, time;
  };
  std::map<std::string, Acc> groups;
  std::map<std::string, AggregateRow> meta;

  for (const auto& path : result_files) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("aggregate: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::vector<std::string> cells;
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 10) continue;
      if (cells[9].rfind("error", 0) == 0) continue;  // failed seeds are excluded
      const std::string key =
          cells[0] + "|" + cells[1] + "|" + cells[2] + "|" + cells[3] + "|" + cells[5];
      auto& acc = groups[key];
      acc.regret.push_back(std::stod(cells[6]));
      acc.time.push_back(std::stod(cells[8]));
      AggregateRow& m = meta[key];
      m.task = cells[0];
      m.method = cells[1];
      m.deg = std::stoi(cells[2]);
      m.noise = std::stod(cells[3]);
      m.shift = cells[5];
    }
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    return std::make_pair(mean, std::sqrt(var));
  };

  std::vector<AggregateRow> out;
  for (auto& [key, acc] : groups) {
    AggregateRow row = meta[key];
    row.seeds = static_cast<int>(acc.regret.size());
    std::tie(row.regret_mean, row.regret_std) = mean_std(acc.regret);
    std::tie(row.time_mean, row.time_std) = mean_std(acc.time);
    out.push_back(row);
  }
  return out;
}

void write_aggregate(const std::vector<AggregateRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_aggregate: cannot open " + path);
  out << "task,method,deg,noise,shift,seeds,regret_mean,regret_std,time_mean,time_std\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.task << "," << r.method << "," << r.deg << "," << r.noise << "," << r.shift
        << "," << r.seeds << "," << r.regret_mean << "," << r.regret_std << ","
        << r.time_mean << "," << r.time_std << "\n";
  }
}

}  // namespace pear
