#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pear/sensitivity.hpp"

namespace pear {

struct CheckReport {
  std::string name;
  std::string instance_desc;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  int skipped = 0;  // boundary coordinates excluded from a comparison

  static CheckReport make(std::string name, std::string desc, double err, double tol,
                          int skipped = 0);
  std::string line() const;
};

/// Central finite differences of the smoothed-objective regret with respect
/// to the predicted cost. Coordinates whose perturbation changes the
/// detected active set are flagged and must be excluded from comparisons.
struct FdGradient {
  Vector grad;
  std::vector<char> skipped;  // 1 where the active set changed under h
  int skipped_count() const;
};

FdGradient finite_diff_regret(const ConvexInstance& inst, const Vector& chat,
                              const Vector& c, double h,
                              const QpSettings& settings = {1e-11, 1e-11, 20000});

/// Max entrywise deviation over the projector identities
/// J P = 0, P J^T = 0, P symmetric, Pi idempotent, P = Pi H^{-1}.
CheckReport check_projection_identities(
    const Matrix& h, const ActiveJacobian& jac, double tolerance = 1e-8,
    const SensitivityOptions& opt = SensitivityOptions::exact());

/// Perturbs the cost along J^T v (shrinking alpha until the active set is
/// preserved) and compares the projected gradients.
CheckReport check_normal_invariance(const ConvexInstance& inst, const Vector& chat,
                                    const Vector& c, int trials, std::uint64_t seed,
                                    double tolerance = 1e-6);

/// Average active-set mask change rate (percent) under elementwise
/// multiplicative cost perturbations of the given scale.
double active_set_change_rate(const ConvexInstance& inst, const Vector& chat,
                              double scale, int trials, std::uint64_t seed,
                              const QpSettings& settings = {});

/// Compares the reduced-system gradient against the dense projector applied
/// to the same error, normalized by 1 + ||e||.
CheckReport schur_vs_dense(const Matrix& h, const ActiveJacobian& jac, const Vector& e,
                           double tolerance = 1e-9, const SensitivityOptions& opt = {});

/// Full randomized suite; inject_bug flips a sign in the reduced-system
/// recovery so the suite itself can be validated.
std::vector<CheckReport> run_default_suite(std::uint64_t seed, bool inject_bug = false);

/// One line per report; returns true when every check passed.
bool write_reports(const std::vector<CheckReport>& reports, const std::string& path);

}  // namespace pear
