#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pear/qp.hpp"

namespace pear {

enum class ObjectiveSense { Minimize, Maximize };

struct CapacityOverflow : std::runtime_error {
  explicit CapacityOverflow(const std::string& what) : std::runtime_error(what) {}
};

/// Directed grid graph routing one unit of flow between opposite corners.
/// Forward: edges point right and down, (0,0) -> (rows-1, cols-1).
/// Cross: edges point right and up, (rows-1, 0) -> (0, cols-1).
struct GridPathProblem {
  enum class Orientation { Forward, Cross };

  int rows = 5;
  int cols = 5;
  Orientation orientation = Orientation::Forward;

  struct Edge {
    int from;
    int to;
  };

  int node_count() const { return rows * cols; }
  int edge_count() const { return rows * (cols - 1) + cols * (rows - 1); }
  int node_id(int i, int j) const { return i * cols + j; }
  std::vector<Edge> edges() const;
  int source() const;
  int target() const;
};

/// 0-1 knapsack with integer weights and capacity a fixed fraction of the
/// total weight.
struct KnapsackProblem {
  int n = 100;
  std::vector<long> weights;
  double capacity_ratio = 0.5;

  long total_weight() const;
  double capacity() const { return capacity_ratio * static_cast<double>(total_weight()); }

  /// Weights drawn uniformly from {3,...,8}; fixed per seed.
  static KnapsackProblem random(int n, double capacity_ratio, std::uint64_t seed);
};

/// Mean-variance allocation: min (lambda/2) w' Sigma w - mu' w subject to
/// sum(w) = 1 and w >= lower_bound.
struct MvoProblem {
  int n = 10;
  Matrix sigma;
  double risk_aversion = 2.0;
  double lower_bound = 0.0;

  /// Sigma = D (Q Q^T / n + 0.1 I) D with Q standard normal and volatilities
  /// D in [0.1, 0.4]; the spectral floor keeps it positive definite.
  static MvoProblem random(int n, std::uint64_t seed, double lower_bound = 0.0);
};

struct DecisionOutcome {
  Vector z;
  double objective_value = 0.0;
};

/// Smoothed LP relaxation of the routing problem; the cost slot is left
/// zero for per-sample filling.
ConvexInstance build_grid_lp(const GridPathProblem& p, double lambda_smooth);

/// Smoothed LP relaxation of the knapsack (cost slot negated internally;
/// cost_sign records the flip so regret stays in maximization units).
ConvexInstance build_knapsack_lp(const KnapsackProblem& p, double lambda_smooth);

/// Quadratic instance with H = risk_aversion * Sigma; the cost slot receives
/// the negated return estimate via set_natural_cost.
ConvexInstance build_mvo(const MvoProblem& p);

/// Minimum-cost monotone path by dynamic programming over the acyclic grid;
/// cost ties resolve to the lexicographically smallest edge sequence.
DecisionOutcome exact_grid_path(const GridPathProblem& p, const Vector& costs);

/// Exact 0-1 knapsack by weight-indexed dynamic programming. Ties prefer
/// exclusion, so non-positive values are never selected.
DecisionOutcome exact_knapsack(const KnapsackProblem& p, const Vector& values);

/// Suboptimality of `achieved` relative to `true_opt`, both evaluated under
/// the true cost.
double regret(const DecisionOutcome& true_opt, const DecisionOutcome& achieved,
              ObjectiveSense sense = ObjectiveSense::Minimize);

/// One benchmark wired for training and evaluation: a writable training
/// instance plus the exact decision oracle used for regret.
struct Task {
  std::string name;
  ConvexInstance instance;
  ObjectiveSense sense = ObjectiveSense::Minimize;
  int cost_dim = 0;
  std::function<DecisionOutcome(const Vector&)> decide;
  std::function<double(const Vector& z, const Vector& cost)> value_under;
};

Task make_grid_task(const GridPathProblem& p, double lambda_smooth);
Task make_knapsack_task(const KnapsackProblem& p, double lambda_smooth);
Task make_mvo_task(const MvoProblem& p, const QpSettings& eval_settings = {1e-9, 1e-9, 20000});

}  // namespace pear
