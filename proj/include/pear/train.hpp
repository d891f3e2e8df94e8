#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pear/datagen.hpp"
#include "pear/problems.hpp"
#include "pear/sensitivity.hpp"

namespace pear {

struct ZeroDenominator : std::runtime_error {
  explicit ZeroDenominator(const std::string& what) : std::runtime_error(what) {}
};

struct LinearModel {
  Matrix W;     // d x p
  Vector bias;  // d

  Vector predict(const Vector& x) const;
  static LinearModel zeros(int d, int p);
};

void save_model(const LinearModel& m, const std::string& config_echo, const std::string& path);
LinearModel load_model(const std::string& path);

enum class LossKind { Pear, Mse, SpoPlus };

const char* to_string(LossKind k);

struct TrainConfig {
  LossKind loss = LossKind::Pear;
  double lambda_smooth = 0.1;
  double beta = 0.1;
  double lr = 1e-2;
  int batch = 32;
  double max_seconds = 600.0;
  int eval_every = 1;              // epochs between validation evaluations
  int patience = 3;                // consecutive evaluations without improvement
  double improve_tol = 0.01;       // relative improvement that resets patience
  int max_epochs = 2000;
  bool reduce_on_plateau = false;  // halve lr after 3 stale evaluations
  double max_failed_fraction = 0.01;  // per-epoch solver-failure budget
  QpSettings solver;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;

  static AdamState init(Eigen::Index size);
};

/// Standard Adam update with bias correction (beta1 0.9, beta2 0.999,
/// eps 1e-8); mutates params and state in place.
void adam_step(AdamState& state, Eigen::Ref<Vector> params, const Vector& grad, double lr);

/// Prediction-error gradient of the half-squared loss: e = chat - c.
Vector grad_mse(const Vector& chat, const Vector& c);

/// Regret gradient: forward solve at chat, active-set detection, reduced
/// Schur solve, optional normal injection (scaled-identity curvature only).
/// Returned in natural prediction units.
Vector grad_pear(ConvexInstance& inst, const Vector& chat, const Vector& c,
                 double lambda_smooth, double beta, const QpSettings& settings = {},
                 double active_tol = 1e-6);

/// Surrogate subgradient from two exact solves, 2 (z*(c) - z*(2 chat - c))
/// mapped to natural prediction units.
Vector grad_spo_plus(const Task& task, const Vector& chat, const Vector& c);

enum class StopReason { Patience, TimeCap, MaxEpochs };

const char* to_string(StopReason r);

struct EvalRecord {
  int epoch = 0;
  double wall_seconds = 0.0;
  double val_regret_pct = 0.0;
  double train_mse = 0.0;
};

struct TrainHistory {
  std::vector<EvalRecord> evals;
  StopReason stop = StopReason::MaxEpochs;
  int failed_samples = 0;
  double wall_seconds = 0.0;
  double best_val_regret_pct = kInf;
};

struct FitResult {
  LinearModel model;
  TrainHistory history;
};

/// Minibatch training with per-sample cost gradients averaged over the batch
/// and pushed through the linear map. Stops on patience, wall-clock cap or
/// epoch cap; returns the best-validation snapshot.
FitResult fit(const Task& task, const Dataset& data, const SplitView& train_view,
              const SplitView& val_view, const TrainConfig& cfg);

/// Total regret over the view divided by total |true optimal value|, in
/// percent. Decisions come from the task's exact oracle.
double normalized_regret(const LinearModel& model, const Task& task, const Dataset& data,
                         const SplitView& view);

/// Mean squared prediction error per cost entry over the view.
double mean_squared_error(const LinearModel& model, const Dataset& data,
                          const SplitView& view);

}  // namespace pear
