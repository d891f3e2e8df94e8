#include "pear/verify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pear/rng.hpp"
#include "pear/verify_suites.hpp"

namespace pear {

namespace {

// Projected gradient at beta = 0 for a plain (cost_sign = 1) instance.
Vector projected_gradient(const ConvexInstance& inst, const Vector& chat, const Vector& c,
                          const QpSettings& settings, ActiveSet* act_out = nullptr) {
  ConvexInstance work = inst;
  work.cost = chat;
  const PrimalDualSolution sol = solve(work, settings);
  if (sol.status != SolveStatus::Solved) {
    throw std::runtime_error("verify: forward solve failed");
  }
  const ActiveSet act = detect_active(work, sol);
  if (act_out) *act_out = act;
  const ActiveJacobian jac = assemble_jacobian(work, act);
  const Vector e = chat - c;
  if (work.curvature.kind == Curvature::Kind::ScaledIdentity) {
    return pear_gradient_lp(work.curvature.lambda, jac, e).g;
  }
  const CurvatureOperator h(work.curvature, work.n);
  return pear_gradient(h, jac, e).g;
}

std::vector<int> active_mask(const ConvexInstance& inst, const PrimalDualSolution& sol,
                             double tol = 1e-6) {
  std::vector<int> mask(static_cast<std::size_t>(inst.ineq_count()), 0);
  for (int i : detect_active(inst, sol, tol).merged()) mask[static_cast<std::size_t>(i)] = 1;
  return mask;
}

double smoothed_value(const ConvexInstance& inst, const Vector& cost_at,
                      const Vector& c_true, const QpSettings& settings,
                      std::vector<int>* mask_out) {
  ConvexInstance work = inst;
  work.cost = cost_at;
  const PrimalDualSolution sol = solve(work, settings);
  if (sol.status != SolveStatus::Solved) {
    throw std::runtime_error("verify: finite-difference solve failed");
  }
  if (mask_out) *mask_out = active_mask(work, sol);
  return 0.5 * sol.z.dot(work.curvature.apply(sol.z)) + c_true.dot(sol.z);
}

}  // namespace

CheckReport CheckReport::make(std::string name, std::string desc, double err, double tol,
                              int skipped) {
  CheckReport r;
  r.name = std::move(name);
  r.instance_desc = std::move(desc);
  r.max_error = err;
  r.tolerance = tol;
  r.skipped = skipped;
  r.passed = err <= tol;
  return r;
}

std::string CheckReport::line() const {
  std::ostringstream os;
  os.precision(6);
  os << name << "," << std::scientific << max_error << "," << tolerance << ","
     << (passed ? "pass" : "FAIL");
  if (skipped > 0) os << ",skipped=" << skipped;
  if (!instance_desc.empty()) os << "," << instance_desc;
  return os.str();
}

int FdGradient::skipped_count() const {
  int n = 0;
  for (char s : skipped) n += s != 0;
  return n;
}

FdGradient finite_diff_regret(const ConvexInstance& inst, const Vector& chat,
                              const Vector& c, double h, const QpSettings& settings) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_regret: h must be positive");
  const int n = inst.n;
  FdGradient out;
  out.grad = Vector::Zero(n);
  out.skipped.assign(static_cast<std::size_t>(n), 0);

  std::vector<int> base_mask;
  smoothed_value(inst, chat, c, settings, &base_mask);
  for (int i = 0; i < n; ++i) {
    Vector up = chat, dn = chat;
    up(i) += h;
    dn(i) -= h;
    std::vector<int> mask_up, mask_dn;
    const double f_up = smoothed_value(inst, up, c, settings, &mask_up);
    const double f_dn = smoothed_value(inst, dn, c, settings, &mask_dn);
    if (mask_up != base_mask || mask_dn != base_mask) {
      out.skipped[static_cast<std::size_t>(i)] = 1;  // not differentiable across the boundary
    }
    out.grad(i) = (f_up - f_dn) / (2.0 * h);
  }
  return out;
}

CheckReport check_projection_identities(const Matrix& h, const ActiveJacobian& jac,
                                        double tolerance, const SensitivityOptions& opt) {
  const Matrix p = dense_projector(h, jac, opt);
  const Matrix pi = tangent_projector(h, jac, opt);
  const Matrix h_inv = factor_spd(h).solve(Matrix(Matrix::Identity(h.rows(), h.cols())));

  double err = (p - p.transpose()).cwiseAbs().maxCoeff();
  err = std::max(err, (pi * pi - pi).cwiseAbs().maxCoeff());
  err = std::max(err, (p - pi * h_inv).cwiseAbs().maxCoeff());
  if (jac.rows() > 0) {
    err = std::max(err, (jac.J * p).cwiseAbs().maxCoeff());
    err = std::max(err, (p * jac.J.transpose()).cwiseAbs().maxCoeff());
  }
  std::ostringstream desc;
  desc << "n=" << h.rows() << " k=" << jac.rows();
  return CheckReport::make("projection_identities", desc.str(), err, tolerance);
}

CheckReport check_normal_invariance(const ConvexInstance& inst, const Vector& chat,
                                    const Vector& c, int trials, std::uint64_t seed,
                                    double tolerance) {
  const QpSettings tight{1e-10, 1e-10, 20000};
  ActiveSet base_act;
  const Vector g0 = projected_gradient(inst, chat, c, tight, &base_act);
  const ActiveJacobian jac = assemble_jacobian(inst, base_act);
  const std::vector<int> base_merged = base_act.merged();

  auto rng = substream(seed, 404);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double max_dev = 0.0;
  int skipped = 0;
  for (int t = 0; t < trials; ++t) {
    if (jac.rows() == 0) break;  // no normal space to perturb along
    Vector v(jac.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
    const Vector delta = jac.J.transpose() * v;
    if (delta.norm() == 0.0) continue;

    double alpha = 0.1 * (1.0 + chat.norm()) / delta.norm();
    bool found = false;
    while (alpha > 1e-10) {
      ActiveSet act;
      try {
        projected_gradient(inst, Vector(chat + alpha * delta), c, tight, &act);
      } catch (const std::exception&) {
        alpha *= 0.5;
        continue;
      }
      if (act.merged() == base_merged) {
        found = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!found) {
      ++skipped;
      continue;
    }
    const Vector g1 = projected_gradient(inst, Vector(chat + alpha * delta), c, tight);
    max_dev = std::max(max_dev, (g1 - g0).cwiseAbs().maxCoeff());
  }
  std::ostringstream desc;
  desc << "trials=" << trials;
  CheckReport rep = CheckReport::make("normal_invariance", desc.str(), max_dev, tolerance, skipped);
  if (skipped == trials && trials > 0 && jac.rows() > 0) rep.passed = false;
  return rep;
}

double active_set_change_rate(const ConvexInstance& inst, const Vector& chat, double scale,
                              int trials, std::uint64_t seed, const QpSettings& settings) {
  if (scale < 0.0) throw std::invalid_argument("active_set_change_rate: scale must be >= 0");
  const int m = inst.ineq_count();
  if (m == 0 || trials <= 0) return 0.0;

  ConvexInstance work = inst;
  work.cost = chat;
  const PrimalDualSolution base_sol = solve(work, settings);
  if (base_sol.status != SolveStatus::Solved) {
    throw std::runtime_error("active_set_change_rate: base solve failed");
  }
  const std::vector<int> base_mask = active_mask(work, base_sol);

  auto rng = substream(seed, 505);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double rho_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vector perturbed = chat;
    for (Eigen::Index i = 0; i < perturbed.size(); ++i) {
      perturbed(i) *= 1.0 + scale * unif(rng);
    }
    work.cost = perturbed;
    const PrimalDualSolution sol = solve(work, settings);
    if (sol.status != SolveStatus::Solved) {
      throw std::runtime_error("active_set_change_rate: perturbed solve failed");
    }
    const std::vector<int> mask = active_mask(work, sol);
    int changed = 0;
    for (int i = 0; i < m; ++i) changed += mask[static_cast<std::size_t>(i)] != base_mask[static_cast<std::size_t>(i)];
    rho_sum += 100.0 * static_cast<double>(changed) / static_cast<double>(m);
  }
  return rho_sum / static_cast<double>(trials);
}

CheckReport schur_vs_dense(const Matrix& h, const ActiveJacobian& jac, const Vector& e,
                           double tolerance, const SensitivityOptions& opt) {
  // Both routes run shift-free: this certifies the reduction algebra itself.
  const CurvatureOperator op(Curvature::explicit_spd(h), static_cast<int>(h.rows()));
  SensitivityOptions reduced = opt;
  reduced.schur_delta_scale = 0.0;
  const Vector g_schur = pear_gradient(op, jac, e, reduced).g;
  SensitivityOptions clean = SensitivityOptions::exact();
  const Vector g_dense = dense_projector(h, jac, clean) * e;
  const double dev = (g_schur - g_dense).norm() / (1.0 + e.norm());
  std::ostringstream desc;
  desc << "n=" << h.rows() << " k=" << jac.rows();
  return CheckReport::make("schur_vs_dense", desc.str(), dev, tolerance);
}

bool write_reports(const std::vector<CheckReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_reports: cannot open " + path);
  out << "name,max_error,tolerance,result\n";
  bool all = true;
  for (const auto& r : reports) {
    out << r.line() << "\n";
    all = all && r.passed;
  }
  return all;
}

}  // namespace pear
