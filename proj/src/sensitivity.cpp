#include "pear/sensitivity.hpp"

#include <algorithm>
#include <cmath>

namespace pear {

namespace {

SpdFactor factor_schur(Matrix s, double delta_scale, const char* who) {
  const Eigen::Index k = s.rows();
  if (delta_scale > 0.0 && k > 0) {
    const double delta = delta_scale * s.trace() / static_cast<double>(k);
    s.diagonal().array() += delta;
  }
  try {
    return factor_spd(s);
  } catch (const NotPositiveDefinite& e) {
    throw SchurSingular(std::string(who) + ": reduced system singular (" + e.what() + ")");
  }
}

}  // namespace

std::vector<int> ActiveSet::merged() const {
  std::vector<int> all = lower_active;
  all.insert(all.end(), upper_active.begin(), upper_active.end());
  std::sort(all.begin(), all.end());
  return all;
}

CurvatureOperator::CurvatureOperator(const Curvature& curvature, int n) : n_(n) {
  if (curvature.kind == Curvature::Kind::ScaledIdentity) {
    lambda_ = curvature.lambda;
  } else {
    factor_ = factor_spd(curvature.H);
  }
}

Vector CurvatureOperator::apply_inverse(const Vector& v) const {
  return factor_ ? factor_->solve(v) : Vector(v / lambda_);
}

Matrix CurvatureOperator::apply_inverse(const Matrix& m) const {
  return factor_ ? factor_->solve(m) : Matrix(m / lambda_);
}

ActiveSet detect_active(const ConvexInstance& inst, const PrimalDualSolution& sol, double tol) {
  ActiveSet act;
  act.equality_count = inst.eq_count();
  const int m = inst.ineq_count();
  if (m == 0) return act;

  const Vector r = inst.ineq_matrix * sol.z;
  const int p = inst.eq_count();
  for (int i = 0; i < m; ++i) {
    const double yi = sol.y(p + i);
    const bool low = std::isfinite(inst.lower(i)) && (r(i) - inst.lower(i)) < -yi + tol;
    const bool up = std::isfinite(inst.upper(i)) && (inst.upper(i) - r(i)) < yi + tol;
    if (low && up) {
      // Both tests fire only when the bounds coincide; the row is always
      // active, filed by the multiplier sign.
      if (yi > 0.0) {
        act.upper_active.push_back(i);
      } else {
        act.lower_active.push_back(i);
      }
    } else if (low) {
      act.lower_active.push_back(i);
    } else if (up) {
      act.upper_active.push_back(i);
    }
  }
  return act;
}

ActiveJacobian assemble_jacobian(const ConvexInstance& inst, const ActiveSet& act,
                                 double rank_tol) {
  const int p = inst.eq_count();
  std::vector<int> upper_sorted = act.upper_active;
  std::sort(upper_sorted.begin(), upper_sorted.end());
  std::vector<RowOrigin> origin;
  origin.reserve(static_cast<std::size_t>(p) + act.lower_active.size() + upper_sorted.size());
  for (int i = 0; i < p; ++i) origin.push_back({RowOrigin::Kind::Equality, i});
  {
    std::vector<int> lower_sorted = act.lower_active;
    std::sort(lower_sorted.begin(), lower_sorted.end());
    std::size_t li = 0, ui = 0;
    while (li < lower_sorted.size() || ui < upper_sorted.size()) {
      if (ui == upper_sorted.size() ||
          (li < lower_sorted.size() && lower_sorted[li] < upper_sorted[ui])) {
        origin.push_back({RowOrigin::Kind::Lower, lower_sorted[li++]});
      } else {
        origin.push_back({RowOrigin::Kind::Upper, upper_sorted[ui++]});
      }
    }
  }

  Matrix stacked(static_cast<Eigen::Index>(origin.size()), inst.n);
  for (std::size_t r = 0; r < origin.size(); ++r) {
    const auto& o = origin[r];
    stacked.row(static_cast<Eigen::Index>(r)) =
        o.kind == RowOrigin::Kind::Equality ? inst.eq_matrix.row(o.index)
                                            : inst.ineq_matrix.row(o.index);
  }

  const std::vector<int> kept = independent_rows(stacked, rank_tol);
  ActiveJacobian jac;
  jac.J.resize(static_cast<Eigen::Index>(kept.size()), inst.n);
  std::size_t next = 0;
  for (std::size_t r = 0; r < origin.size(); ++r) {
    if (next < kept.size() && kept[next] == static_cast<int>(r)) {
      jac.J.row(static_cast<Eigen::Index>(next)) = stacked.row(static_cast<Eigen::Index>(r));
      jac.row_origin.push_back(origin[r]);
      ++next;
    } else {
      jac.dropped.push_back(origin[r]);
    }
  }
  return jac;
}

PearGradient pear_gradient(const CurvatureOperator& h, const ActiveJacobian& jac,
                           const Vector& e, const SensitivityOptions& opt) {
  if (e.size() != h.dim() || (jac.rows() > 0 && jac.cols() != h.dim())) {
    throw DimensionMismatch("pear_gradient: inconsistent dimensions");
  }
  PearGradient out;
  const Vector x = h.apply_inverse(e);
  const int k = jac.rows();
  if (k == 0) {
    out.g = x;
    out.n_vec = Vector::Zero(e.size());
    out.dual_perturbation.resize(0);
    return out;
  }
  const Matrix hinv_jt = h.apply_inverse(Matrix(jac.J.transpose()));
  const Matrix schur = jac.J * hinv_jt;
  const SpdFactor fac = factor_schur(schur, opt.schur_delta_scale, "pear_gradient");
  out.dual_perturbation = fac.solve(Vector(jac.J * x));
  out.n_vec = hinv_jt * out.dual_perturbation;
  out.g = opt.flip_projection_sign ? Vector(x + out.n_vec) : Vector(x - out.n_vec);
  return out;
}

PearGradient pear_gradient_lp(double lambda_smooth, const ActiveJacobian& jac,
                              const Vector& e, const SensitivityOptions& opt) {
  if (lambda_smooth <= 0.0) {
    throw std::invalid_argument("pear_gradient_lp: lambda_smooth must be positive");
  }
  PearGradient out;
  const int k = jac.rows();
  if (k == 0) {
    out.g = e / lambda_smooth;
    out.n_vec = Vector::Zero(e.size());
    out.dual_perturbation.resize(0);
    return out;
  }
  // (J J^T) v = J e is the lambda-scaled reduced system; the same v solves
  // both, so the two paths agree exactly (the delta shift scales with S).
  const Matrix schur = jac.J * jac.J.transpose();
  const SpdFactor fac = factor_schur(schur, opt.schur_delta_scale, "pear_gradient_lp");
  out.dual_perturbation = fac.solve(Vector(jac.J * e));
  out.n_vec = (jac.J.transpose() * out.dual_perturbation) / lambda_smooth;
  const Vector x = e / lambda_smooth;
  out.g = opt.flip_projection_sign ? Vector(x + out.n_vec) : Vector(x - out.n_vec);
  return out;
}

Vector normal_inject(const PearGradient& pg, double beta) {
  const double g_norm = pg.g.norm();
  const double n_norm = pg.n_vec.norm();
  if (beta <= 0.0 || n_norm == 0.0 || g_norm == 0.0) return pg.g;
  return pg.g + beta * (g_norm / n_norm) * pg.n_vec;
}

Matrix dense_projector(const Matrix& h, const ActiveJacobian& jac,
                       const SensitivityOptions& opt) {
  const SpdFactor h_fac = factor_spd(h);
  const Matrix h_inv = h_fac.solve(Matrix(Matrix::Identity(h.rows(), h.cols())));
  if (jac.rows() == 0) return h_inv;
  const Matrix hinv_jt = h_fac.solve(Matrix(jac.J.transpose()));
  const SpdFactor s_fac =
      factor_schur(Matrix(jac.J * hinv_jt), opt.schur_delta_scale, "dense_projector");
  const Matrix s_inv_j_hinv = s_fac.solve(Matrix(hinv_jt.transpose()));
  return h_inv - hinv_jt * s_inv_j_hinv;
}

Matrix tangent_projector(const Matrix& h, const ActiveJacobian& jac,
                         const SensitivityOptions& opt) {
  const Matrix eye = Matrix::Identity(h.rows(), h.cols());
  if (jac.rows() == 0) return eye;
  const SpdFactor h_fac = factor_spd(h);
  const Matrix hinv_jt = h_fac.solve(Matrix(jac.J.transpose()));
  const SpdFactor s_fac =
      factor_schur(Matrix(jac.J * hinv_jt), opt.schur_delta_scale, "tangent_projector");
  return eye - hinv_jt * s_fac.solve(Matrix(jac.J));
}

}  // namespace pear
