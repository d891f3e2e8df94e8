#include "pear/problems.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "pear/rng.hpp"

namespace pear {

std::vector<GridPathProblem::Edge> GridPathProblem::edges() const {
  std::vector<Edge> e;
  e.reserve(static_cast<std::size_t>(edge_count()));
  if (orientation == Orientation::Forward) {
    for (int i = 0; i + 1 < rows; ++i)
      for (int j = 0; j < cols; ++j) e.push_back({node_id(i, j), node_id(i + 1, j)});
  } else {
    for (int i = 1; i < rows; ++i)
      for (int j = 0; j < cols; ++j) e.push_back({node_id(i, j), node_id(i - 1, j)});
  }
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j + 1 < cols; ++j) e.push_back({node_id(i, j), node_id(i, j + 1)});
  return e;
}

int GridPathProblem::source() const {
  return orientation == Orientation::Forward ? node_id(0, 0) : node_id(rows - 1, 0);
}

int GridPathProblem::target() const {
  return orientation == Orientation::Forward ? node_id(rows - 1, cols - 1)
                                             : node_id(0, cols - 1);
}

long KnapsackProblem::total_weight() const {
  long t = 0;
  for (long w : weights) t += w;
  return t;
}

KnapsackProblem KnapsackProblem::random(int n, double capacity_ratio, std::uint64_t seed) {
  KnapsackProblem p;
  p.n = n;
  p.capacity_ratio = capacity_ratio;
  auto rng = substream(seed, /*tag=*/101);
  std::uniform_int_distribution<long> dist(3, 8);
  p.weights.resize(static_cast<std::size_t>(n));
  for (auto& w : p.weights) w = dist(rng);
  return p;
}

MvoProblem MvoProblem::random(int n, std::uint64_t seed, double lower_bound) {
  MvoProblem p;
  p.n = n;
  p.lower_bound = lower_bound;
  auto rng = substream(seed, /*tag=*/202);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = gauss(rng);
  std::uniform_real_distribution<double> vol(0.1, 0.4);
  Vector d(n);
  for (int i = 0; i < n; ++i) d(i) = vol(rng);
  Matrix core = q * q.transpose() / static_cast<double>(n);
  core += 0.1 * Matrix::Identity(n, n);
  p.sigma = d.asDiagonal() * core * d.asDiagonal();
  return p;
}

ConvexInstance build_grid_lp(const GridPathProblem& p, double lambda_smooth) {
  const auto edges = p.edges();
  const int n = static_cast<int>(edges.size());
  const int nodes = p.node_count();

  ConvexInstance inst;
  inst.n = n;
  inst.curvature = Curvature::scaled_identity(lambda_smooth);
  inst.cost = Vector::Zero(n);
  inst.eq_matrix = Matrix::Zero(nodes, n);
  inst.eq_rhs = Vector::Zero(nodes);
  for (int e = 0; e < n; ++e) {
    inst.eq_matrix(edges[static_cast<std::size_t>(e)].to, e) += 1.0;    // inflow
    inst.eq_matrix(edges[static_cast<std::size_t>(e)].from, e) -= 1.0;  // outflow
  }
  inst.eq_rhs(p.source()) = -1.0;
  inst.eq_rhs(p.target()) = 1.0;
  inst.ineq_matrix = Matrix::Identity(n, n);
  inst.lower = Vector::Zero(n);
  inst.upper = Vector::Ones(n);
  return inst;
}

ConvexInstance build_knapsack_lp(const KnapsackProblem& p, double lambda_smooth) {
  const int n = p.n;
  ConvexInstance inst;
  inst.n = n;
  inst.curvature = Curvature::scaled_identity(lambda_smooth);
  inst.cost = Vector::Zero(n);
  inst.cost_sign = -1.0;  // stated as a maximization; minimize the negated values
  inst.eq_matrix.resize(0, n);
  inst.eq_rhs.resize(0);
  inst.ineq_matrix = Matrix::Zero(n + 1, n);
  inst.lower.resize(n + 1);
  inst.upper.resize(n + 1);
  for (int j = 0; j < n; ++j) inst.ineq_matrix(0, j) = static_cast<double>(p.weights[static_cast<std::size_t>(j)]);
  inst.lower(0) = -kInf;
  inst.upper(0) = p.capacity();
  for (int j = 0; j < n; ++j) {
    inst.ineq_matrix(j + 1, j) = 1.0;
    inst.lower(j + 1) = 0.0;
    inst.upper(j + 1) = 1.0;
  }
  return inst;
}

ConvexInstance build_mvo(const MvoProblem& p) {
  const int n = p.n;
  Matrix h = p.risk_aversion * p.sigma;
  // Builder contract: reject covariance inputs that are not positive definite.
  factor_spd(h);

  ConvexInstance inst;
  inst.n = n;
  inst.curvature = Curvature::explicit_spd(std::move(h));
  inst.cost = Vector::Zero(n);
  inst.cost_sign = -1.0;  // cost slot receives the negated return estimate
  inst.eq_matrix = Matrix::Ones(1, n);
  inst.eq_rhs = Vector::Ones(1);
  inst.ineq_matrix = Matrix::Identity(n, n);
  inst.lower = Vector::Constant(n, p.lower_bound);
  inst.upper = Vector::Constant(n, kInf);
  return inst;
}

DecisionOutcome exact_grid_path(const GridPathProblem& p, const Vector& costs) {
  const auto edges = p.edges();
  const int n_edges = static_cast<int>(edges.size());
  if (costs.size() != n_edges) {
    throw DimensionMismatch("exact_grid_path: cost length != edge count");
  }
  const int n_nodes = p.node_count();

  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_nodes));
  std::vector<int> indeg(static_cast<std::size_t>(n_nodes), 0);
  for (int e = 0; e < n_edges; ++e) {
    out[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].from)].push_back(e);
    ++indeg[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].to)];
  }
  std::vector<int> topo;
  topo.reserve(static_cast<std::size_t>(n_nodes));
  std::queue<int> ready;
  for (int v = 0; v < n_nodes; ++v)
    if (indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop();
    topo.push_back(v);
    for (int e : out[static_cast<std::size_t>(v)]) {
      if (--indeg[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].to)] == 0)
        ready.push(edges[static_cast<std::size_t>(e)].to);
    }
  }

  // Cost-to-target, then a greedy walk picking the smallest edge index among
  // optimal continuations: lexicographically smallest optimal edge sequence.
  std::vector<double> best(static_cast<std::size_t>(n_nodes), kInf);
  best[static_cast<std::size_t>(p.target())] = 0.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    for (int e : out[static_cast<std::size_t>(*it)]) {
      const double via = costs(e) + best[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].to)];
      best[static_cast<std::size_t>(*it)] = std::min(best[static_cast<std::size_t>(*it)], via);
    }
  }

  DecisionOutcome res;
  res.z = Vector::Zero(n_edges);
  int v = p.source();
  while (v != p.target()) {
    int chosen = -1;
    for (int e : out[static_cast<std::size_t>(v)]) {
      if (costs(e) + best[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].to)] ==
          best[static_cast<std::size_t>(v)]) {
        chosen = e;
        break;
      }
    }
    if (chosen < 0) throw std::runtime_error("exact_grid_path: target unreachable");
    res.z(chosen) = 1.0;
    res.objective_value += costs(chosen);
    v = edges[static_cast<std::size_t>(chosen)].to;
  }
  return res;
}

DecisionOutcome exact_knapsack(const KnapsackProblem& p, const Vector& values) {
  const int n = p.n;
  if (values.size() != n) throw DimensionMismatch("exact_knapsack: values length != n");
  const long cap = static_cast<long>(std::floor(p.capacity() + 1e-9));
  constexpr long kMaxCells = 50'000'000;
  if (cap < 0 || (static_cast<long>(n) + 1) * (cap + 1) > kMaxCells) {
    throw CapacityOverflow("exact_knapsack: DP table would exceed the configured limit");
  }

  const long width = cap + 1;
  std::vector<double> dp(static_cast<std::size_t>((n + 1) * width), 0.0);
  for (int i = 1; i <= n; ++i) {
    const long w = p.weights[static_cast<std::size_t>(i - 1)];
    const double v = values(i - 1);
    const double* prev = dp.data() + static_cast<std::size_t>((i - 1) * width);
    double* cur = dp.data() + static_cast<std::size_t>(i * width);
    for (long c = 0; c <= cap; ++c) {
      double bestv = prev[c];
      if (w <= c) {
        const double take = prev[c - w] + v;
        if (take > bestv) bestv = take;  // ties prefer exclusion
      }
      cur[c] = bestv;
    }
  }

  DecisionOutcome res;
  res.z = Vector::Zero(n);
  long c = cap;
  for (int i = n; i >= 1; --i) {
    const double* prev = dp.data() + static_cast<std::size_t>((i - 1) * width);
    const double* cur = dp.data() + static_cast<std::size_t>(i * width);
    if (cur[c] != prev[c]) {
      res.z(i - 1) = 1.0;
      c -= p.weights[static_cast<std::size_t>(i - 1)];
    }
  }
  res.objective_value = dp[static_cast<std::size_t>(n * width + cap)];
  return res;
}

double regret(const DecisionOutcome& true_opt, const DecisionOutcome& achieved,
              ObjectiveSense sense) {
  return sense == ObjectiveSense::Minimize
             ? achieved.objective_value - true_opt.objective_value
             : true_opt.objective_value - achieved.objective_value;
}

Task make_grid_task(const GridPathProblem& p, double lambda_smooth) {
  Task t;
  t.name = p.orientation == GridPathProblem::Orientation::Forward ? "shortest_path"
                                                                  : "shortest_path_cross";
  t.instance = build_grid_lp(p, lambda_smooth);
  t.sense = ObjectiveSense::Minimize;
  t.cost_dim = p.edge_count();
  t.decide = [p](const Vector& costs) { return exact_grid_path(p, costs); };
  t.value_under = [](const Vector& z, const Vector& c) { return c.dot(z); };
  return t;
}

Task make_knapsack_task(const KnapsackProblem& p, double lambda_smooth) {
  Task t;
  t.name = "knapsack";
  t.instance = build_knapsack_lp(p, lambda_smooth);
  t.sense = ObjectiveSense::Maximize;
  t.cost_dim = p.n;
  t.decide = [p](const Vector& values) { return exact_knapsack(p, values); };
  t.value_under = [](const Vector& z, const Vector& c) { return c.dot(z); };
  return t;
}

Task make_mvo_task(const MvoProblem& p, const QpSettings& eval_settings) {
  Task t;
  t.name = "mvo_synthetic";
  t.instance = build_mvo(p);
  t.sense = ObjectiveSense::Minimize;
  t.cost_dim = p.n;
  const ConvexInstance base = t.instance;
  const Matrix h = p.risk_aversion * p.sigma;
  t.decide = [base, eval_settings, h](const Vector& mu) {
    ConvexInstance inst = base;
    inst.set_natural_cost(mu);
    const PrimalDualSolution sol = solve(inst, eval_settings);
    DecisionOutcome out;
    out.z = sol.z;
    out.objective_value = 0.5 * sol.z.dot(h * sol.z) - mu.dot(sol.z);
    return out;
  };
  t.value_under = [h](const Vector& z, const Vector& mu) {
    return 0.5 * z.dot(h * z) - mu.dot(z);
  };
  return t;
}

}  // namespace pear
