#pragma once

#include <optional>
#include <vector>

#include "pear/qp.hpp"

namespace pear {

struct SchurSingular : std::runtime_error {
  explicit SchurSingular(const std::string& what) : std::runtime_error(what) {}
};

/// Binding inequality rows at the solution, split by which side binds.
/// The sets are disjoint; a row whose bounds coincide is always active and
/// is classified by the sign of its multiplier.
struct ActiveSet {
  std::vector<int> lower_active;
  std::vector<int> upper_active;
  int equality_count = 0;

  /// Sorted union of both sides.
  std::vector<int> merged() const;
};

struct RowOrigin {
  enum class Kind { Equality, Lower, Upper };
  Kind kind;
  int index;  // row index in the equality / inequality block
};

/// Stacked matrix of equality rows over active inequality rows, filtered to
/// full row rank. Dropped rows are kept for bookkeeping.
struct ActiveJacobian {
  Matrix J;  // k x n
  std::vector<RowOrigin> row_origin;  // one per row of J
  std::vector<RowOrigin> dropped;

  int rows() const { return static_cast<int>(J.rows()); }
  int cols() const { return static_cast<int>(J.cols()); }
};

/// Tangent gradient g, normal component n_vec (g + n_vec = H^{-1} e when any
/// constraint is active) and the dual perturbation of the reduced system.
struct PearGradient {
  Vector g;
  Vector n_vec;
  Vector dual_perturbation;  // length k
};

/// Applies H^{-1} through a factorization; the inverse is never formed.
class CurvatureOperator {
 public:
  CurvatureOperator(const Curvature& curvature, int n);

  Vector apply_inverse(const Vector& v) const;
  Matrix apply_inverse(const Matrix& m) const;
  bool is_scaled_identity() const { return !factor_.has_value(); }
  double lambda() const { return lambda_; }
  int dim() const { return n_; }

 private:
  int n_ = 0;
  double lambda_ = 1.0;
  std::optional<SpdFactor> factor_;
};

struct SensitivityOptions {
  /// Relative diagonal shift added to the Schur matrix before factorization,
  /// as delta = scale * trace(S) / k. Zero disables the shift, in which case
  /// rank-deficient active sets raise SchurSingular.
  double schur_delta_scale = 1e-10;
  /// Test hook: negates the projection update (g = x + H^{-1} J^T v instead
  /// of x - H^{-1} J^T v) so downstream verification catches it.
  bool flip_projection_sign = false;

  /// Shift-free options for oracle paths, which must stay exact.
  static SensitivityOptions exact() {
    SensitivityOptions o;
    o.schur_delta_scale = 0.0;
    return o;
  }
};

/// Complementary slackness test with an absolute tolerance band on the dual
/// side: row i is lower-active when (r_i - l_i) < -y_i + tol and
/// upper-active when (u_i - r_i) < y_i + tol.
ActiveSet detect_active(const ConvexInstance& inst, const PrimalDualSolution& sol,
                        double tol = 1e-6);

/// J = [A; G_active] with dependent rows removed (rank tolerance relative to
/// the largest pivot).
ActiveJacobian assemble_jacobian(const ConvexInstance& inst, const ActiveSet& act,
                                 double rank_tol = 1e-8);

/// Projected-error gradient via the reduced system:
///   x = H^{-1} e,  (J H^{-1} J^T) v = J x,  g = x - H^{-1} J^T v.
/// With no active rows, g = H^{-1} e and n_vec = 0.
PearGradient pear_gradient(const CurvatureOperator& h, const ActiveJacobian& jac,
                           const Vector& e, const SensitivityOptions& opt = {});

/// Scaled-identity specialization: (J J^T) v = J e, g = (e - J^T v) / lambda.
/// Identical result to pear_gradient with H = lambda * I.
PearGradient pear_gradient_lp(double lambda_smooth, const ActiveJacobian& jac,
                              const Vector& e, const SensitivityOptions& opt = {});

/// g + beta * (||g|| / ||n||) * n; returns g unchanged when beta = 0 or
/// either norm vanishes.
Vector normal_inject(const PearGradient& pg, double beta);

/// Explicit sensitivity operator H^{-1} - H^{-1} J^T (J H^{-1} J^T)^{-1} J H^{-1}.
/// Verification-only path; training never forms this matrix. Unlike the
/// gradient routines it applies no diagonal shift by default, so a
/// rank-deficient J raises SchurSingular.
Matrix dense_projector(const Matrix& h, const ActiveJacobian& jac,
                       const SensitivityOptions& opt = SensitivityOptions::exact());

/// Oblique projector I - H^{-1} J^T (J H^{-1} J^T)^{-1} J onto ker(J).
Matrix tangent_projector(const Matrix& h, const ActiveJacobian& jac,
                         const SensitivityOptions& opt = SensitivityOptions::exact());

}  // namespace pear
