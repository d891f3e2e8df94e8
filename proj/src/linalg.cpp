#include "pear/linalg.hpp"

#include <cmath>
#include <limits>

namespace pear {

SpdFactor SpdFactor::compute(const Matrix& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) {
    throw DimensionMismatch("factor_spd: matrix is not square");
  }
  const double sym_err = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (n > 0 && sym_err > 1e-10 * scale) {
    throw NotPositiveDefinite("factor_spd: matrix is not symmetric");
  }

  const double max_diag = n > 0 ? m.diagonal().cwiseAbs().maxCoeff() : 0.0;
  const double pivot_floor =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;

  SpdFactor f;
  f.L_.setZero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - f.L_.row(j).head(j).squaredNorm();
    if (d <= pivot_floor) {
      throw NotPositiveDefinite("factor_spd: pivot " + std::to_string(d) +
                                " at index " + std::to_string(j));
    }
    f.L_(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double sum = f.L_.row(i).head(j).dot(f.L_.row(j).head(j));
      f.L_(i, j) = (m(i, j) - sum) / f.L_(j, j);
    }
  }
  return f;
}

Vector SpdFactor::solve(const Vector& rhs) const {
  const Eigen::Index n = L_.rows();
  if (rhs.size() != n) {
    throw DimensionMismatch("solve_spd: rhs length " + std::to_string(rhs.size()) +
                            " != dimension " + std::to_string(n));
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = (rhs(i) - L_.row(i).head(i).dot(y.head(i))) / L_(i, i);
  }
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    x(i) = (y(i) - L_.col(i).tail(n - i - 1).dot(x.tail(n - i - 1))) / L_(i, i);
  }
  return x;
}

Matrix SpdFactor::solve(const Matrix& rhs) const {
  if (rhs.rows() != L_.rows()) {
    throw DimensionMismatch("solve_spd: rhs has wrong row count");
  }
  Matrix x(rhs.rows(), rhs.cols());
  for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
    x.col(c) = solve(Vector(rhs.col(c)));
  }
  return x;
}

Matrix SpdFactor::reconstruct() const {
  return L_ * L_.transpose();
}

std::vector<int> independent_rows(const Matrix& j, double tol) {
  const Eigen::Index rows = j.rows();
  const Eigen::Index cols = j.cols();
  std::vector<int> kept;
  if (rows == 0 || cols == 0) return kept;

  Matrix work = j;
  std::vector<Eigen::Index> pivot_col;  // per kept row
  double max_pivot = 0.0;

  for (Eigen::Index r = 0; r < rows; ++r) {
    // Eliminate components along previously kept rows.
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const Eigen::Index kr = kept[k];
      const Eigen::Index pc = pivot_col[k];
      const double factor = work(r, pc) / work(kr, pc);
      if (factor != 0.0) {
        work.row(r) -= factor * work.row(kr);
        work(r, pc) = 0.0;  // cancel exactly
      }
    }
    Eigen::Index pc = 0;
    const double pivot = work.row(r).cwiseAbs().maxCoeff(&pc);
    max_pivot = std::max(max_pivot, pivot);
    if (pivot > tol * max_pivot && pivot > 0.0) {
      kept.push_back(static_cast<int>(r));
      pivot_col.push_back(pc);
    }
  }
  return kept;
}

}  // namespace pear
