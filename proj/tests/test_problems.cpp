#include <doctest.h>

#include <random>

#include "pear/problems.hpp"
#include "pear/rng.hpp"
#include "pear/verify_suites.hpp"

using pear::DecisionOutcome;
using pear::GridPathProblem;
using pear::KnapsackProblem;
using pear::Matrix;
using pear::MvoProblem;
using pear::Vector;

TEST_CASE("grid construction matches the benchmark sizes") {
  GridPathProblem p;
  CHECK(p.edge_count() == 40);
  CHECK(p.node_count() == 25);
  const auto inst = pear::build_grid_lp(p, 0.1);
  CHECK(inst.n == 40);
  CHECK(inst.eq_count() == 25);
  CHECK(inst.ineq_count() == 40);
  // Flow balance has one redundant row.
  CHECK(pear::independent_rows(inst.eq_matrix).size() == 24);

  GridPathProblem tiny;
  tiny.rows = 2;
  tiny.cols = 2;
  CHECK(tiny.edge_count() == 4);
  CHECK(tiny.node_count() == 4);

  GridPathProblem cross;
  cross.orientation = GridPathProblem::Orientation::Cross;
  CHECK(cross.edge_count() == 40);
  CHECK(cross.node_count() == 25);
  CHECK(cross.source() == cross.node_id(4, 0));
  CHECK(cross.target() == cross.node_id(0, 4));
  // Mirrored vertical direction: every non-horizontal edge points up.
  for (const auto& e : cross.edges()) {
    const int di = e.to / 5 - e.from / 5;
    CHECK((di == -1 || di == 0));
  }
}

TEST_CASE("knapsack instance has a capacity row plus boxes") {
  const KnapsackProblem p = KnapsackProblem::random(100, 0.5, 0);
  const auto inst = pear::build_knapsack_lp(p, 0.1);
  CHECK(inst.n == 100);
  CHECK(inst.ineq_count() == 101);
  CHECK(inst.cost_sign == -1.0);
  for (long w : p.weights) {
    CHECK(w >= 3);
    CHECK(w <= 8);
  }

  KnapsackProblem two;
  two.n = 2;
  two.weights = {1, 1};
  two.capacity_ratio = 0.5;
  CHECK(two.capacity() == doctest::Approx(1.0));

  KnapsackProblem shifted = p;
  shifted.capacity_ratio = 0.3;
  CHECK(shifted.capacity() == doctest::Approx(0.3 * static_cast<double>(p.total_weight())));
  CHECK(shifted.weights == p.weights);
}

TEST_CASE("mean-variance builder reproduces hand-solved portfolios") {
  MvoProblem p;
  p.n = 2;
  p.sigma = Matrix::Identity(2, 2) * 0.5;  // H = 2 * 0.5 I = I
  p.risk_aversion = 2.0;
  p.lower_bound = -pear::kInf;
  auto inst = pear::build_mvo(p);
  Vector mu(2);
  mu << 1, 0;
  inst.set_natural_cost(mu);
  const auto sol = pear::solve(inst);
  REQUIRE(sol.status == pear::SolveStatus::Solved);
  CHECK(sol.z(0) == doctest::Approx(0.75));
  CHECK(sol.z(1) == doctest::Approx(0.25));

  inst.set_natural_cost(Vector::Zero(2));
  const auto min_var = pear::solve(inst);
  REQUIRE(min_var.status == pear::SolveStatus::Solved);
  CHECK(min_var.z(0) == doctest::Approx(0.5));
  CHECK(min_var.z(1) == doctest::Approx(0.5));

  MvoProblem long_only = p;
  long_only.lower_bound = 0.0;
  MvoProblem shorting = p;
  shorting.lower_bound = -0.1;
  const auto a = pear::build_mvo(long_only);
  const auto b = pear::build_mvo(shorting);
  CHECK(a.lower(0) == 0.0);
  CHECK(b.lower(0) == -0.1);
  CHECK((a.ineq_matrix - b.ineq_matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grid oracle matches enumeration") {
  GridPathProblem tiny;
  tiny.rows = 2;
  tiny.cols = 2;
  const auto all_ones = pear::exact_grid_path(tiny, Vector::Ones(4));
  CHECK(all_ones.objective_value == doctest::Approx(2.0));
  CHECK(all_ones.z.sum() == doctest::Approx(2.0));

  // Edge order for the 2x2 forward grid: down(0,0), down(0,1), right(0,0), right(1,0).
  Vector favor_down(4);
  favor_down << 0.1, 9.0, 9.0, 0.1;
  const auto down_right = pear::exact_grid_path(tiny, favor_down);
  CHECK(down_right.z(0) == 1.0);
  CHECK(down_right.z(3) == 1.0);
  CHECK(down_right.objective_value == doctest::Approx(0.2));

  GridPathProblem grid;
  auto rng = pear::substream(17, 1);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    Vector costs(grid.edge_count());
    for (int i = 0; i < costs.size(); ++i) costs(i) = unif(rng);
    const DecisionOutcome dp = pear::exact_grid_path(grid, costs);
    const DecisionOutcome brute = pear::enumerate_grid_paths(grid, costs);
    CHECK(dp.objective_value == doctest::Approx(brute.objective_value).epsilon(1e-12));
    CHECK((dp.z - brute.z).cwiseAbs().maxCoeff() == 0.0);
  }

  // Cross orientation routes bottom-left to top-right.
  GridPathProblem cross;
  cross.orientation = GridPathProblem::Orientation::Cross;
  const auto cross_path = pear::exact_grid_path(cross, Vector::Ones(40));
  CHECK(cross_path.objective_value == doctest::Approx(8.0));
}

TEST_CASE("knapsack oracle matches enumeration and handles edge cases") {
  KnapsackProblem p;
  p.n = 3;
  p.weights = {1, 2, 3};
  p.capacity_ratio = 5.0 / 6.0;  // capacity 5
  Vector values(3);
  values << 6, 10, 12;
  const auto picked = pear::exact_knapsack(p, values);
  CHECK(picked.objective_value == doctest::Approx(22.0));
  CHECK(picked.z(0) == 0.0);
  CHECK(picked.z(1) == 1.0);
  CHECK(picked.z(2) == 1.0);

  const auto none = pear::exact_knapsack(p, Vector::Zero(3));
  CHECK(none.objective_value == 0.0);
  CHECK(none.z.cwiseAbs().maxCoeff() == 0.0);

  KnapsackProblem slack = p;
  slack.capacity_ratio = 1.0;
  Vector mixed(3);
  mixed << 5, -2, 3;
  const auto all_positive = pear::exact_knapsack(slack, mixed);
  CHECK(all_positive.z(0) == 1.0);
  CHECK(all_positive.z(1) == 0.0);
  CHECK(all_positive.z(2) == 1.0);

  auto rng = pear::substream(17, 2);
  std::uniform_real_distribution<double> unif(-2.0, 10.0);
  for (int n : {8, 12, 15}) {
    KnapsackProblem kp = KnapsackProblem::random(n, 0.45, 7);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = unif(rng);
    const auto dp = pear::exact_knapsack(kp, v);
    const auto brute = pear::enumerate_knapsack(kp, v);
    CHECK(dp.objective_value == doctest::Approx(brute.objective_value).epsilon(1e-12));
  }
}

TEST_CASE("knapsack oracle rejects oversized DP tables") {
  KnapsackProblem huge;
  huge.n = 100;
  huge.weights.assign(100, 10'000'000L);
  huge.capacity_ratio = 0.9;
  CHECK_THROWS_AS(pear::exact_knapsack(huge, Vector::Ones(100)), pear::CapacityOverflow);
}

TEST_CASE("regret is sense-aware and non-negative at the optimum") {
  DecisionOutcome best{Vector::Ones(1), 3.0};
  DecisionOutcome worse{Vector::Ones(1), 2.0};
  CHECK(pear::regret(best, best, pear::ObjectiveSense::Maximize) == 0.0);
  CHECK(pear::regret(best, worse, pear::ObjectiveSense::Maximize) == doctest::Approx(1.0));

  // Knapsack with c = (3, 2), capacity 1, predictions (1, 5): true optimum 3,
  // achieved 2.
  KnapsackProblem p;
  p.n = 2;
  p.weights = {1, 1};
  p.capacity_ratio = 0.5;
  Vector c(2), chat(2);
  c << 3, 2;
  chat << 1, 5;
  const auto z_true = pear::exact_knapsack(p, c);
  const auto z_hat = pear::exact_knapsack(p, chat);
  DecisionOutcome achieved{z_hat.z, c.dot(z_hat.z)};
  CHECK(pear::regret(z_true, achieved, pear::ObjectiveSense::Maximize) == doctest::Approx(1.0));

  auto rng = pear::substream(17, 3);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  GridPathProblem grid;
  for (int trial = 0; trial < 10; ++trial) {
    Vector cost(grid.edge_count()), pred(grid.edge_count());
    for (int i = 0; i < cost.size(); ++i) {
      cost(i) = unif(rng);
      pred(i) = unif(rng);
    }
    const auto ztrue = pear::exact_grid_path(grid, cost);
    const auto zhat = pear::exact_grid_path(grid, pred);
    DecisionOutcome got{zhat.z, cost.dot(zhat.z)};
    CHECK(pear::regret(ztrue, got, pear::ObjectiveSense::Minimize) >= -1e-9);
  }
}

TEST_CASE("rounded smoothed solutions recover the exact path on most draws") {
  GridPathProblem grid;
  auto inst = pear::build_grid_lp(grid, 0.1);
  auto rng = pear::substream(17, 4);
  std::uniform_real_distribution<double> unif(1.0, 2.0);
  int hits = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    Vector costs(grid.edge_count());
    for (int i = 0; i < costs.size(); ++i) costs(i) = unif(rng);
    inst.set_natural_cost(costs);
    const auto sol = pear::solve(inst);
    REQUIRE(sol.status == pear::SolveStatus::Solved);
    const auto dp = pear::exact_grid_path(grid, costs);
    const Vector rounded = (sol.z.array() > 0.5).cast<double>();
    if ((rounded - dp.z).cwiseAbs().maxCoeff() == 0.0) ++hits;
  }
  CHECK(hits >= trials * 95 / 100);
}
