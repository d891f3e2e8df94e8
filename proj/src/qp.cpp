#include "pear/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pear {

namespace {

bool finite(double x) { return std::isfinite(x); }

// Rows whose two bounds coincide act as equalities; an interior-point slack
// cannot exist for them.
bool is_pinned(double l, double u) {
  return finite(l) && finite(u) && (u - l) <= 1e-12 * std::max({1.0, std::abs(l), std::abs(u)});
}

struct Workspace {
  // Effective equality system: user rows stacked over pinned inequality rows,
  // then filtered to independent rows.
  Matrix A;          // p_eff x n (independent rows only)
  Vector b;          // p_eff
  std::vector<int> eq_slot;  // per kept row: [0,p) user row, p+i pinned ineq row i

  // Free inequality rows (not pinned), with finite-side bookkeeping.
  std::vector<int> ineq_rows;   // row indices into inst.ineq_matrix
  std::vector<int> low_rows;    // subset with finite lower, index into ineq_rows
  std::vector<int> up_rows;     // subset with finite upper, index into ineq_rows

  // Rows of G with >1 nonzero are accumulated via a dense product; rows with
  // a single nonzero update the diagonal directly.
  std::vector<int> unit_col;  // per ineq_rows entry: column of the single nonzero, or -1
};

Workspace build_workspace(const ConvexInstance& inst) {
  Workspace w;
  const int p = inst.eq_count();
  const int m = inst.ineq_count();
  const int n = inst.n;

  std::vector<int> slot;
  Eigen::Index eq_rows = p;
  for (int i = 0; i < m; ++i) {
    if (is_pinned(inst.lower(i), inst.upper(i))) ++eq_rows;
  }
  Matrix full_a(eq_rows, n);
  Vector full_b(eq_rows);
  if (p > 0) {
    full_a.topRows(p) = inst.eq_matrix;
    full_b.head(p) = inst.eq_rhs;
  }
  for (int i = 0; i < p; ++i) slot.push_back(i);
  Eigen::Index r = p;
  for (int i = 0; i < m; ++i) {
    if (is_pinned(inst.lower(i), inst.upper(i))) {
      full_a.row(r) = inst.ineq_matrix.row(i);
      full_b(r) = 0.5 * (inst.lower(i) + inst.upper(i));
      slot.push_back(p + i);
      ++r;
    } else {
      w.ineq_rows.push_back(i);
    }
  }

  const std::vector<int> kept = independent_rows(full_a, 1e-10);
  w.A.resize(static_cast<Eigen::Index>(kept.size()), n);
  w.b.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    w.A.row(static_cast<Eigen::Index>(k)) = full_a.row(kept[k]);
    w.b(static_cast<Eigen::Index>(k)) = full_b(kept[k]);
    w.eq_slot.push_back(slot[static_cast<std::size_t>(kept[k])]);
  }

  for (std::size_t k = 0; k < w.ineq_rows.size(); ++k) {
    const int i = w.ineq_rows[k];
    if (finite(inst.lower(i))) w.low_rows.push_back(static_cast<int>(k));
    if (finite(inst.upper(i))) w.up_rows.push_back(static_cast<int>(k));
    int nnz = 0;
    int col = -1;
    for (int j = 0; j < inst.n; ++j) {
      if (inst.ineq_matrix(i, j) != 0.0) {
        ++nnz;
        col = j;
      }
    }
    w.unit_col.push_back(nnz == 1 ? col : -1);
  }
  return w;
}

// Cholesky with one diagonal-bump retry; the bump only ever fires on
// nearly singular Newton systems late in the solve.
SpdFactor robust_factor(Matrix m) {
  try {
    return factor_spd(m);
  } catch (const NotPositiveDefinite&) {
    const double bump = 1e-12 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += bump;
    return factor_spd(m);
  }
}

double max_step(const Vector& x, const Vector& dx, double tau) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) alpha = std::min(alpha, -tau * x(i) / dx(i));
  }
  return alpha;
}

}  // namespace

void ConvexInstance::validate() const {
  const int p = eq_count();
  const int m = ineq_count();
  if (cost.size() != n) throw DimensionMismatch("ConvexInstance: cost length != n");
  if (eq_matrix.size() > 0 && eq_matrix.cols() != n)
    throw DimensionMismatch("ConvexInstance: eq_matrix cols != n");
  if (eq_rhs.size() != p) throw DimensionMismatch("ConvexInstance: eq_rhs length != p");
  if (ineq_matrix.size() > 0 && ineq_matrix.cols() != n)
    throw DimensionMismatch("ConvexInstance: ineq_matrix cols != n");
  if (lower.size() != m || upper.size() != m)
    throw DimensionMismatch("ConvexInstance: bound lengths != m");
  for (int i = 0; i < m; ++i) {
    if (lower(i) > upper(i)) throw std::invalid_argument("ConvexInstance: lower > upper");
  }
  if (curvature.kind == Curvature::Kind::ScaledIdentity && curvature.lambda <= 0.0)
    throw std::invalid_argument("ConvexInstance: lambda must be positive");
  if (curvature.kind == Curvature::Kind::ExplicitSpd &&
      (curvature.H.rows() != n || curvature.H.cols() != n))
    throw DimensionMismatch("ConvexInstance: H must be n x n");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

double objective_value(const ConvexInstance& inst, const Vector& z) {
  return 0.5 * z.dot(inst.curvature.apply(z)) + inst.cost.dot(z);
}

KktResiduals kkt_report(const ConvexInstance& inst, const PrimalDualSolution& sol) {
  const int p = inst.eq_count();
  const int m = inst.ineq_count();
  if (sol.z.size() != inst.n || sol.y.size() != p + m)
    throw DimensionMismatch("kkt_report: solution dimensions do not match instance");

  KktResiduals res;
  Vector stat = inst.curvature.apply(sol.z) + inst.cost;
  if (p > 0) stat += inst.eq_matrix.transpose() * sol.y.head(p);
  if (m > 0) stat += inst.ineq_matrix.transpose() * sol.y.tail(m);
  res.stationarity = stat.size() > 0 ? stat.cwiseAbs().maxCoeff() : 0.0;

  double primal = 0.0;
  if (p > 0) primal = (inst.eq_matrix * sol.z - inst.eq_rhs).cwiseAbs().maxCoeff();
  double comp = 0.0;
  if (m > 0) {
    const Vector r = inst.ineq_matrix * sol.z;
    for (int i = 0; i < m; ++i) {
      const double yi = sol.y(p + i);
      const double y_low = std::max(-yi, 0.0);
      const double y_up = std::max(yi, 0.0);
      if (finite(inst.lower(i))) {
        primal = std::max(primal, inst.lower(i) - r(i));
        comp = std::max(comp, y_low * std::abs(r(i) - inst.lower(i)));
      } else {
        comp = std::max(comp, y_low);  // no lower bound: this side's dual must vanish
      }
      if (finite(inst.upper(i))) {
        primal = std::max(primal, r(i) - inst.upper(i));
        comp = std::max(comp, y_up * std::abs(inst.upper(i) - r(i)));
      } else {
        comp = std::max(comp, y_up);
      }
    }
  }
  res.primal = std::max(primal, 0.0);
  res.complementarity = comp;
  return res;
}

PrimalDualSolution solve(const ConvexInstance& inst, const QpSettings& settings) {
  inst.validate();
  const int n = inst.n;
  const int m = inst.ineq_count();
  const int p_user = inst.eq_count();

  const Workspace w = build_workspace(inst);
  const int p = static_cast<int>(w.A.rows());
  const int mi = static_cast<int>(w.ineq_rows.size());
  const int nl = static_cast<int>(w.low_rows.size());
  const int nu = static_cast<int>(w.up_rows.size());

  Matrix g_free(mi, n);
  Vector lo(mi), up(mi);
  for (int k = 0; k < mi; ++k) {
    g_free.row(k) = inst.ineq_matrix.row(w.ineq_rows[k]);
    lo(k) = inst.lower(w.ineq_rows[k]);
    up(k) = inst.upper(w.ineq_rows[k]);
  }
  // Dense block of non-unit rows for the Newton matrix accumulation.
  std::vector<int> gen_rows;
  for (int k = 0; k < mi; ++k) {
    if (w.unit_col[k] < 0) gen_rows.push_back(k);
  }
  Matrix g_gen(static_cast<Eigen::Index>(gen_rows.size()), n);
  for (std::size_t i = 0; i < gen_rows.size(); ++i) g_gen.row(static_cast<Eigen::Index>(i)) = g_free.row(gen_rows[i]);

  const Matrix h_dense = inst.curvature.dense(n);

  // Starting point: equality-constrained minimizer, unit slacks/multipliers.
  const SpdFactor h_fac = robust_factor(h_dense);
  Vector z(n), nu_eq = Vector::Zero(p);
  {
    if (p > 0) {
      Matrix ht_at = h_fac.solve(Matrix(w.A.transpose()));
      SpdFactor s_fac = robust_factor(Matrix(w.A * ht_at));
      nu_eq = s_fac.solve(Vector(-(w.A * h_fac.solve(inst.cost)) - w.b));
      z = -h_fac.solve(Vector(inst.cost + w.A.transpose() * nu_eq));
    } else {
      z = -h_fac.solve(inst.cost);
    }
  }

  Vector s_low(nl), mu_low = Vector::Ones(nl);
  Vector s_up(nu), mu_up = Vector::Ones(nu);
  {
    const Vector r = mi > 0 ? Vector(g_free * z) : Vector();
    for (int a = 0; a < nl; ++a) s_low(a) = std::max(r(w.low_rows[a]) - lo(w.low_rows[a]), 1.0);
    for (int a = 0; a < nu; ++a) s_up(a) = std::max(up(w.up_rows[a]) - r(w.up_rows[a]), 1.0);
  }

  auto materialize = [&](PrimalDualSolution& out) {
    out.z = z;
    out.y = Vector::Zero(p_user + m);
    for (int k = 0; k < p; ++k) {
      // Slots < p_user are user equality rows; pinned inequality rows were
      // recorded at p_user + i and land in the inequality dual block.
      out.y(w.eq_slot[static_cast<std::size_t>(k)]) = nu_eq(k);
    }
    for (int a = 0; a < nl; ++a) out.y(p_user + w.ineq_rows[w.low_rows[a]]) -= mu_low(a);
    for (int a = 0; a < nu; ++a) out.y(p_user + w.ineq_rows[w.up_rows[a]]) += mu_up(a);
  };

  // Active-set polish: classify each finite side as binding when its
  // multiplier dominates its slack, solve the equality-reduced KKT system
  // exactly, and keep the result when it does not regress. Near-degenerate
  // iterates land on exact vertex solutions this way.
  auto try_polish = [&](const Vector& z_ipm, const Vector& s_l, const Vector& mu_l,
                        const Vector& s_u, const Vector& mu_u,
                        PrimalDualSolution& io, KktResiduals& io_res) {
    std::vector<int> act_rows;  // indices into ineq_rows
    std::vector<double> act_rhs;
    std::vector<bool> act_is_lower;
    Vector r_now = mi > 0 ? Vector(g_free * z_ipm) : Vector();
    std::vector<double> low_margin(static_cast<std::size_t>(mi), -1.0);
    std::vector<double> up_margin(static_cast<std::size_t>(mi), -1.0);
    for (int a = 0; a < nl; ++a)
      if (mu_l(a) > s_l(a)) low_margin[static_cast<std::size_t>(w.low_rows[a])] = mu_l(a) - s_l(a);
    for (int a = 0; a < nu; ++a)
      if (mu_u(a) > s_u(a)) up_margin[static_cast<std::size_t>(w.up_rows[a])] = mu_u(a) - s_u(a);
    for (int k = 0; k < mi; ++k) {
      const double lm = low_margin[static_cast<std::size_t>(k)];
      const double um = up_margin[static_cast<std::size_t>(k)];
      if (lm < 0.0 && um < 0.0) continue;
      const bool lower_side = lm >= um;
      act_rows.push_back(k);
      act_is_lower.push_back(lower_side);
      act_rhs.push_back(lower_side ? lo(k) : up(k));
    }

    Matrix stacked(p + static_cast<Eigen::Index>(act_rows.size()), n);
    Vector rhs(p + static_cast<Eigen::Index>(act_rows.size()));
    if (p > 0) {
      stacked.topRows(p) = w.A;
      rhs.head(p) = w.b;
    }
    for (std::size_t i = 0; i < act_rows.size(); ++i) {
      stacked.row(p + static_cast<Eigen::Index>(i)) = g_free.row(act_rows[i]);
      rhs(p + static_cast<Eigen::Index>(i)) = act_rhs[i];
    }
    const std::vector<int> kept = independent_rows(stacked, 1e-10);
    Matrix j_act(static_cast<Eigen::Index>(kept.size()), n);
    Vector b_act(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
      j_act.row(static_cast<Eigen::Index>(i)) = stacked.row(kept[i]);
      b_act(static_cast<Eigen::Index>(i)) = rhs(kept[i]);
    }

    PrimalDualSolution cand;
    cand.iterations = io.iterations;
    try {
      if (kept.empty()) {
        cand.z = -h_fac.solve(inst.cost);
        cand.y = Vector::Zero(p_user + m);
      } else {
        const Matrix hinv_jt = h_fac.solve(Matrix(j_act.transpose()));
        const SpdFactor s_fac = factor_spd(Matrix(j_act * hinv_jt));
        const Vector y_act =
            s_fac.solve(Vector(-(j_act * h_fac.solve(inst.cost)) - b_act));
        cand.z = -h_fac.solve(Vector(inst.cost + j_act.transpose() * y_act));
        cand.y = Vector::Zero(p_user + m);
        for (std::size_t i = 0; i < kept.size(); ++i) {
          const int row = kept[i];
          if (row < p) {
            cand.y(w.eq_slot[static_cast<std::size_t>(row)]) = y_act(static_cast<Eigen::Index>(i));
          } else {
            const std::size_t ai = static_cast<std::size_t>(row - p);
            const double yv = y_act(static_cast<Eigen::Index>(i));
            // A binding lower bound cannot carry a positive multiplier.
            if (act_is_lower[ai] ? yv > 1e-9 : yv < -1e-9) return;
            cand.y(p_user + w.ineq_rows[act_rows[ai]]) = yv;
          }
        }
      }
    } catch (const NotPositiveDefinite&) {
      return;  // degenerate active-set guess; keep the interior iterate
    }
    const KktResiduals res = kkt_report(inst, cand);
    if (res.max() <= std::max(io_res.max(), settings.eps_abs)) {
      cand.stationarity_residual = res.stationarity;
      cand.primal_residual = res.primal;
      io = cand;
      io_res = res;
    }
  };

  PrimalDualSolution best;
  KktResiduals best_res;
  double best_score = kInf;
  const int total_pairs = nl + nu;
  const double tau = 0.995;
  int stalled = 0;

  const int iter_cap = std::max(1, std::min(settings.max_iter, 500));
  PrimalDualSolution cur;
  for (int iter = 1; iter <= iter_cap; ++iter) {
    materialize(cur);
    cur.iterations = iter - 1;
    const KktResiduals res = kkt_report(inst, cur);
    cur.stationarity_residual = res.stationarity;
    cur.primal_residual = res.primal;
    const double gap =
        total_pairs > 0 ? (s_low.dot(mu_low) + s_up.dot(mu_up)) / total_pairs : 0.0;

    const double score = std::max(res.max(), gap);
    if (score < best_score) {
      best_score = score;
      best = cur;
    }
    const double obj_scale = std::abs(objective_value(inst, z));
    const double gap_tol = settings.eps_abs + settings.eps_rel * obj_scale;
    if (res.stationarity <= settings.eps_abs && res.primal <= settings.eps_abs &&
        res.complementarity <= settings.eps_abs && gap <= std::max(gap_tol, settings.eps_abs)) {
      cur.status = SolveStatus::Solved;
      return cur;
    }
    if (stalled >= 3) break;

    // Residuals of the perturbed KKT system in IPM variables.
    Vector r_d = inst.curvature.apply(z) + inst.cost;
    if (p > 0) r_d += w.A.transpose() * nu_eq;
    const Vector r_free = mi > 0 ? Vector(g_free * z) : Vector();
    for (int a = 0; a < nl; ++a) r_d -= g_free.row(w.low_rows[a]).transpose() * mu_low(a);
    for (int a = 0; a < nu; ++a) r_d += g_free.row(w.up_rows[a]).transpose() * mu_up(a);
    const Vector r_p = p > 0 ? Vector(w.A * z - w.b) : Vector();
    Vector r_l(nl), r_u(nu);
    for (int a = 0; a < nl; ++a) r_l(a) = r_free(w.low_rows[a]) - lo(w.low_rows[a]) - s_low(a);
    for (int a = 0; a < nu; ++a) r_u(a) = r_free(w.up_rows[a]) + s_up(a) - up(w.up_rows[a]);

    // Newton matrix M = H + G^T diag(mu/s) G, assembled sparse-aware.
    Matrix newton = h_dense;
    Vector d_row = Vector::Zero(mi);
    for (int a = 0; a < nl; ++a) d_row(w.low_rows[a]) += mu_low(a) / s_low(a);
    for (int a = 0; a < nu; ++a) d_row(w.up_rows[a]) += mu_up(a) / s_up(a);
    for (int k = 0; k < mi; ++k) {
      const int col = w.unit_col[k];
      if (col >= 0) {
        const double gval = g_free(k, col);
        newton(col, col) += d_row(k) * gval * gval;
      }
    }
    if (!gen_rows.empty()) {
      Vector d_gen(static_cast<Eigen::Index>(gen_rows.size()));
      for (std::size_t i = 0; i < gen_rows.size(); ++i) d_gen(static_cast<Eigen::Index>(i)) = d_row(gen_rows[i]);
      newton += g_gen.transpose() * d_gen.asDiagonal() * g_gen;
    }
    SpdFactor m_fac = robust_factor(newton);
    Matrix at_solved;
    SpdFactor* eq_fac = nullptr;
    SpdFactor eq_fac_storage;
    if (p > 0) {
      at_solved = m_fac.solve(Matrix(w.A.transpose()));
      eq_fac_storage = robust_factor(Matrix(w.A * at_solved));
      eq_fac = &eq_fac_storage;
    }

    auto newton_solve = [&](const Vector& rcs_l, const Vector& rcs_u, Vector& dz, Vector& dnu,
                            Vector& ds_l, Vector& dmu_l, Vector& ds_u, Vector& dmu_u) {
      Vector rhs_z = -r_d;
      for (int a = 0; a < nl; ++a) {
        rhs_z -= g_free.row(w.low_rows[a]).transpose() *
                 ((rcs_l(a) + mu_low(a) * r_l(a)) / s_low(a));
      }
      for (int a = 0; a < nu; ++a) {
        rhs_z += g_free.row(w.up_rows[a]).transpose() *
                 ((rcs_u(a) - mu_up(a) * r_u(a)) / s_up(a));
      }
      if (p > 0) {
        dnu = eq_fac->solve(Vector(w.A * m_fac.solve(rhs_z) + r_p));
        dz = m_fac.solve(Vector(rhs_z - w.A.transpose() * dnu));
      } else {
        dnu.resize(0);
        dz = m_fac.solve(rhs_z);
      }
      const Vector g_dz = mi > 0 ? Vector(g_free * dz) : Vector();
      ds_l.resize(nl);
      dmu_l.resize(nl);
      for (int a = 0; a < nl; ++a) {
        ds_l(a) = g_dz(w.low_rows[a]) + r_l(a);
        dmu_l(a) = -(rcs_l(a) + mu_low(a) * ds_l(a)) / s_low(a);
      }
      ds_u.resize(nu);
      dmu_u.resize(nu);
      for (int a = 0; a < nu; ++a) {
        ds_u(a) = -(g_dz(w.up_rows[a]) + r_u(a));
        dmu_u(a) = -(rcs_u(a) + mu_up(a) * ds_u(a)) / s_up(a);
      }
    };

    // Predictor (affine scaling direction).
    Vector rcs_l_aff(nl), rcs_u_aff(nu);
    for (int a = 0; a < nl; ++a) rcs_l_aff(a) = s_low(a) * mu_low(a);
    for (int a = 0; a < nu; ++a) rcs_u_aff(a) = s_up(a) * mu_up(a);
    Vector dz, dnu, ds_l, dmu_l, ds_u, dmu_u;
    newton_solve(rcs_l_aff, rcs_u_aff, dz, dnu, ds_l, dmu_l, ds_u, dmu_u);

    double sigma = 0.0;
    if (total_pairs > 0) {
      const double ap = std::min(max_step(s_low, ds_l, 1.0), max_step(s_up, ds_u, 1.0));
      const double ad = std::min(max_step(mu_low, dmu_l, 1.0), max_step(mu_up, dmu_u, 1.0));
      double gap_aff = 0.0;
      for (int a = 0; a < nl; ++a)
        gap_aff += (s_low(a) + ap * ds_l(a)) * (mu_low(a) + ad * dmu_l(a));
      for (int a = 0; a < nu; ++a)
        gap_aff += (s_up(a) + ap * ds_u(a)) * (mu_up(a) + ad * dmu_u(a));
      gap_aff /= total_pairs;
      const double ratio = gap > 0.0 ? std::clamp(gap_aff / gap, 0.0, 1.0) : 0.0;
      sigma = ratio * ratio * ratio;

      // Corrector with centering.
      Vector rcs_l_cor(nl), rcs_u_cor(nu);
      for (int a = 0; a < nl; ++a)
        rcs_l_cor(a) = s_low(a) * mu_low(a) + ds_l(a) * dmu_l(a) - sigma * gap;
      for (int a = 0; a < nu; ++a)
        rcs_u_cor(a) = s_up(a) * mu_up(a) + ds_u(a) * dmu_u(a) - sigma * gap;
      newton_solve(rcs_l_cor, rcs_u_cor, dz, dnu, ds_l, dmu_l, ds_u, dmu_u);
    }

    const double alpha_p = std::min(max_step(s_low, ds_l, tau), max_step(s_up, ds_u, tau));
    const double alpha_d = std::min(max_step(mu_low, dmu_l, tau), max_step(mu_up, dmu_u, tau));
    z += alpha_p * dz;
    if (p > 0) nu_eq += alpha_d * dnu;
    s_low += alpha_p * ds_l;
    mu_low += alpha_d * dmu_l;
    s_up += alpha_p * ds_u;
    mu_up += alpha_d * dmu_u;

    if (std::min(alpha_p, alpha_d) < 1e-10) {
      ++stalled;
    } else {
      stalled = 0;
    }
  }

  // Did not certify optimality: report the best iterate seen.
  double dual_norm = 0.0;
  for (int a = 0; a < nl; ++a) dual_norm = std::max(dual_norm, std::abs(mu_low(a)));
  for (int a = 0; a < nu; ++a) dual_norm = std::max(dual_norm, std::abs(mu_up(a)));
  if (p > 0) dual_norm = std::max(dual_norm, nu_eq.cwiseAbs().maxCoeff());
  const bool primal_stuck = best.primal_residual > std::max(1e-6, 10.0 * settings.eps_abs);
  best.status =
      (primal_stuck && dual_norm > 1e6) ? SolveStatus::Infeasible : SolveStatus::MaxIterations;
  return best;
}

}  // namespace pear
