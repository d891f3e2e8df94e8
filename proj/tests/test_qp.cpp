#include <doctest.h>

#include <random>

#include "pear/qp.hpp"
#include "pear/rng.hpp"

using pear::ConvexInstance;
using pear::Curvature;
using pear::Matrix;
using pear::Vector;

namespace {

ConvexInstance scalar_box(double cost, double lo, double hi) {
  ConvexInstance inst;
  inst.n = 1;
  inst.curvature = Curvature::scaled_identity(1.0);
  inst.cost = Vector::Constant(1, cost);
  inst.eq_matrix.resize(0, 1);
  inst.eq_rhs.resize(0);
  inst.ineq_matrix = Matrix::Identity(1, 1);
  inst.lower = Vector::Constant(1, lo);
  inst.upper = Vector::Constant(1, hi);
  return inst;
}

Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  Matrix m = a * a.transpose() / static_cast<double>(n);
  m += Matrix::Identity(n, n);
  return m;
}

ConvexInstance random_box_instance(std::mt19937_64& rng, int max_n, bool explicit_h) {
  std::uniform_int_distribution<int> n_dist(1, max_n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  ConvexInstance inst;
  inst.n = n_dist(rng);
  inst.curvature = explicit_h ? Curvature::explicit_spd(random_spd(inst.n, rng))
                              : Curvature::scaled_identity(unif(rng));
  inst.cost.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) inst.cost(i) = gauss(rng);
  inst.eq_matrix.resize(0, inst.n);
  inst.eq_rhs.resize(0);
  inst.ineq_matrix = Matrix::Identity(inst.n, inst.n);
  inst.lower.resize(inst.n);
  inst.upper.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    inst.lower(i) = -unif(rng);
    inst.upper(i) = unif(rng);
  }
  return inst;
}

// Independent oracle for box-constrained problems: projected gradient
// descent with a conservative fixed step, run to stagnation.
Vector projected_gradient_oracle(const ConvexInstance& inst) {
  const Matrix h = inst.curvature.dense(inst.n);
  const Eigen::MatrixXd h_plain(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h_plain);
  const double step = 1.0 / eig.eigenvalues().maxCoeff();
  Vector z = Vector::Zero(inst.n);
  for (int it = 0; it < 500000; ++it) {
    Vector next = z - step * (h * z + inst.cost);
    next = next.cwiseMax(inst.lower).cwiseMin(inst.upper);
    const double delta = (next - z).cwiseAbs().maxCoeff();
    z = next;
    if (delta < 1e-13) break;
  }
  return z;
}

}  // namespace

TEST_CASE("box lower bound binds with a negative multiplier") {
  const auto sol = pear::solve(scalar_box(0.0, 1.0, 2.0));
  REQUIRE(sol.status == pear::SolveStatus::Solved);
  CHECK(sol.z(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.y(0) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("box upper bound binds with a positive multiplier") {
  const auto sol = pear::solve(scalar_box(-3.0, 1.0, 2.0));
  REQUIRE(sol.status == pear::SolveStatus::Solved);
  CHECK(sol.z(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.y(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("symmetric equality splits the unit budget") {
  ConvexInstance inst;
  inst.n = 2;
  inst.curvature = Curvature::scaled_identity(1.0);
  inst.cost = Vector::Zero(2);
  inst.eq_matrix = Matrix::Ones(1, 2);
  inst.eq_rhs = Vector::Ones(1);
  inst.ineq_matrix.resize(0, 2);
  inst.lower.resize(0);
  inst.upper.resize(0);
  const auto sol = pear::solve(inst);
  REQUIRE(sol.status == pear::SolveStatus::Solved);
  CHECK(sol.z(0) == doctest::Approx(0.5));
  CHECK(sol.z(1) == doctest::Approx(0.5));
}

TEST_CASE("kkt_report vanishes at the exact KKT point and sees perturbations") {
  const ConvexInstance inst = scalar_box(0.0, 1.0, 2.0);
  pear::PrimalDualSolution exact;
  exact.z = Vector::Constant(1, 1.0);
  exact.y = Vector::Constant(1, -1.0);
  const auto res = pear::kkt_report(inst, exact);
  CHECK(res.stationarity <= 1e-12);
  CHECK(res.primal <= 1e-12);
  CHECK(res.complementarity <= 1e-12);

  pear::PrimalDualSolution off = exact;
  off.z(0) = 1.1;  // still feasible, no longer stationary
  const auto res_off = pear::kkt_report(inst, off);
  CHECK(res_off.primal <= 1e-12);
  CHECK(res_off.stationarity == doctest::Approx(0.1));
}

TEST_CASE("kkt_report is zero at the unconstrained optimum") {
  ConvexInstance inst;
  inst.n = 2;
  Matrix h(2, 2);
  h << 2, 0.5, 0.5, 1;
  inst.curvature = Curvature::explicit_spd(h);
  inst.cost = Vector::Ones(2);
  inst.eq_matrix.resize(0, 2);
  inst.eq_rhs.resize(0);
  inst.ineq_matrix.resize(0, 2);
  inst.lower.resize(0);
  inst.upper.resize(0);

  pear::PrimalDualSolution sol;
  sol.z = -pear::factor_spd(h).solve(inst.cost);
  sol.y.resize(0);
  CHECK(pear::kkt_report(inst, sol).stationarity <= 1e-12);
}

TEST_CASE("random feasible instances solve to certified residuals") {
  auto rng = pear::substream(11, 1);
  const pear::QpSettings settings;
  for (int trial = 0; trial < 200; ++trial) {
    const ConvexInstance inst = random_box_instance(rng, 20, trial % 2 == 0);
    const auto sol = pear::solve(inst, settings);
    REQUIRE(sol.status == pear::SolveStatus::Solved);
    const auto res = pear::kkt_report(inst, sol);
    CHECK(res.stationarity <= settings.eps_abs);
    CHECK(res.primal <= settings.eps_abs);
    CHECK(res.complementarity <= settings.eps_abs);

    // Multiplier signs pair with the side that binds.
    const Vector r = inst.ineq_matrix * sol.z;
    for (int i = 0; i < inst.ineq_count(); ++i) {
      const double yi = sol.y(i);
      CHECK(std::max(-yi, 0.0) * std::abs(r(i) - inst.lower(i)) <= 1e-6);
      CHECK(std::max(yi, 0.0) * std::abs(inst.upper(i) - r(i)) <= 1e-6);
    }
  }
}

TEST_CASE("solver matches the projected-gradient oracle on box problems") {
  auto rng = pear::substream(11, 2);
  for (int trial = 0; trial < 40; ++trial) {
    const ConvexInstance inst = random_box_instance(rng, 12, trial % 3 == 0);
    const auto sol = pear::solve(inst);
    REQUIRE(sol.status == pear::SolveStatus::Solved);
    const Vector oracle = projected_gradient_oracle(inst);
    CHECK((sol.z - oracle).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("repeated solves agree") {
  auto rng = pear::substream(11, 3);
  const ConvexInstance inst = random_box_instance(rng, 10, true);
  const auto a = pear::solve(inst);
  const auto b = pear::solve(inst);
  CHECK((a.z - b.z).cwiseAbs().maxCoeff() <= 10 * 1e-8);
}

TEST_CASE("an infeasible instance is reported as such") {
  ConvexInstance inst;
  inst.n = 1;
  inst.curvature = Curvature::scaled_identity(1.0);
  inst.cost = Vector::Zero(1);
  inst.eq_matrix = Matrix::Ones(1, 1);
  inst.eq_rhs = Vector::Ones(1);  // z = 1 against z <= 0
  inst.ineq_matrix = Matrix::Identity(1, 1);
  inst.lower = Vector::Constant(1, -10.0);
  inst.upper = Vector::Constant(1, 0.0);
  const auto sol = pear::solve(inst);
  CHECK(sol.status == pear::SolveStatus::Infeasible);
}

TEST_CASE("redundant equality rows are tolerated") {
  ConvexInstance inst;
  inst.n = 2;
  inst.curvature = Curvature::scaled_identity(1.0);
  inst.cost = Vector::Zero(2);
  inst.eq_matrix.resize(2, 2);
  inst.eq_matrix << 1, 1, 2, 2;  // second row is dependent
  inst.eq_rhs.resize(2);
  inst.eq_rhs << 1, 2;
  inst.ineq_matrix.resize(0, 2);
  inst.lower.resize(0);
  inst.upper.resize(0);
  const auto sol = pear::solve(inst);
  REQUIRE(sol.status == pear::SolveStatus::Solved);
  CHECK(sol.z(0) == doctest::Approx(0.5));
  CHECK(sol.z(1) == doctest::Approx(0.5));
  CHECK(sol.y(1) == doctest::Approx(0.0));  // dropped row keeps a zero multiplier
}

TEST_CASE("coincident bounds act as an equality row") {
  ConvexInstance inst = scalar_box(0.0, 1.5, 1.5);
  const auto sol = pear::solve(inst);
  REQUIRE(sol.status == pear::SolveStatus::Solved);
  CHECK(sol.z(0) == doctest::Approx(1.5));
  const auto res = pear::kkt_report(inst, sol);
  CHECK(res.stationarity <= 1e-8);
}

TEST_CASE("instance validation rejects malformed data") {
  ConvexInstance inst = scalar_box(0.0, 1.0, 2.0);
  inst.lower(0) = 3.0;  // lower > upper
  CHECK_THROWS_AS(pear::solve(inst), std::invalid_argument);
  ConvexInstance bad_dim = scalar_box(0.0, 1.0, 2.0);
  bad_dim.cost = Vector::Zero(2);
  CHECK_THROWS_AS(pear::solve(bad_dim), pear::DimensionMismatch);
}
