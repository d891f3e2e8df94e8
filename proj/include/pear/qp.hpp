#pragma once

#include <limits>

#include "pear/linalg.hpp"

namespace pear {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Quadratic curvature of the objective: either lambda * I (smoothed LPs)
/// or an explicit SPD matrix.
struct Curvature {
  enum class Kind { ScaledIdentity, ExplicitSpd };

  Kind kind = Kind::ScaledIdentity;
  double lambda = 1.0;  // ScaledIdentity only
  Matrix H;             // ExplicitSpd only

  static Curvature scaled_identity(double lam) {
    Curvature c;
    c.kind = Kind::ScaledIdentity;
    c.lambda = lam;
    return c;
  }
  static Curvature explicit_spd(Matrix h) {
    Curvature c;
    c.kind = Kind::ExplicitSpd;
    c.H = std::move(h);
    return c;
  }

  Vector apply(const Vector& z) const {
    return kind == Kind::ScaledIdentity ? Vector(lambda * z) : Vector(H * z);
  }
  Matrix dense(Eigen::Index n) const {
    if (kind == Kind::ExplicitSpd) return H;
    return Matrix(lambda * Matrix::Identity(n, n));
  }
};

/// One optimization problem:
///   minimize    (1/2) z^T H z + cost^T z
///   subject to  A z = b,  l <= G z <= u
/// with H SPD. Bounds may be -inf/+inf. For problems stated as
/// maximizations the builders negate the cost slot and record cost_sign
/// so downstream code never special-cases the sign.
struct ConvexInstance {
  int n = 0;
  Curvature curvature;
  Vector cost;     // minimization cost slot (the predicted-cost slot)
  Matrix eq_matrix;  // p x n
  Vector eq_rhs;     // p
  Matrix ineq_matrix;  // m x n
  Vector lower;        // m, may be -inf
  Vector upper;        // m, may be +inf
  double cost_sign = 1.0;  // minimization cost = cost_sign * natural cost

  int eq_count() const { return static_cast<int>(eq_matrix.rows()); }
  int ineq_count() const { return static_cast<int>(ineq_matrix.rows()); }

  void set_natural_cost(const Vector& c) { cost = cost_sign * c; }

  /// Throws DimensionMismatch / std::invalid_argument on malformed data.
  void validate() const;
};

enum class SolveStatus { Solved, MaxIterations, Infeasible };

const char* to_string(SolveStatus s);

/// Primal-dual pair with certified residuals. Dual ordering: equality rows
/// first, then one multiplier per inequality row with the convention
/// y_i < 0 only when the lower bound binds and y_i > 0 only when the upper
/// bound binds.
struct PrimalDualSolution {
  Vector z;
  Vector y;  // length p + m
  SolveStatus status = SolveStatus::MaxIterations;
  double stationarity_residual = kInf;
  double primal_residual = kInf;
  int iterations = 0;

  Eigen::VectorBlock<const Vector> y_eq(const ConvexInstance& inst) const {
    return y.head(inst.eq_count());
  }
  Eigen::VectorBlock<const Vector> y_ineq(const ConvexInstance& inst) const {
    return y.tail(inst.ineq_count());
  }
};

struct QpSettings {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  int max_iter = 20000;
};

/// Interior-point forward solve. status == Solved certifies that the
/// stationarity, primal and complementarity residuals are all <= eps_abs.
PrimalDualSolution solve(const ConvexInstance& inst, const QpSettings& settings = {});

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double max() const { return std::max(stationarity, std::max(primal, complementarity)); }
};

/// Recomputes the three KKT residual blocks (infinity norms) for any
/// candidate primal-dual pair. Pure; no solver state involved.
KktResiduals kkt_report(const ConvexInstance& inst, const PrimalDualSolution& sol);

/// Objective value (1/2) z^T H z + cost^T z.
double objective_value(const ConvexInstance& inst, const Vector& z);

}  // namespace pear
