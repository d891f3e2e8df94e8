#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace pear {

// Row-major dense storage throughout; problem sizes stay small enough that
// sparse formats never pay off.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// Cholesky factor L of a symmetric positive definite matrix, M = L*L^T.
/// No implicit regularization is applied; a pivot at or below
/// dim * eps * max|diag| raises NotPositiveDefinite.
class SpdFactor {
 public:
  static SpdFactor compute(const Matrix& m);

  Eigen::Index dimension() const { return L_.rows(); }
  const Matrix& lower() const { return L_; }

  /// Solves M x = rhs by forward/back substitution.
  Vector solve(const Vector& rhs) const;

  /// Column-wise solve, M X = rhs.
  Matrix solve(const Matrix& rhs) const;

  /// Rebuilds L*L^T (test support).
  Matrix reconstruct() const;

 private:
  Matrix L_;
};

inline SpdFactor factor_spd(const Matrix& m) { return SpdFactor::compute(m); }
inline Vector solve_spd(const SpdFactor& f, const Vector& rhs) { return f.solve(rhs); }

/// Indices of a maximal set of linearly independent rows of J, preferring
/// earlier rows. Pivoted elimination; a row is kept when its pivot exceeds
/// tol times the largest pivot seen so far. Every dropped row lies in the
/// span of the kept rows within tol.
std::vector<int> independent_rows(const Matrix& j, double tol = 1e-8);

}  // namespace pear
