#include "pear/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace pear {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

Vector LinearModel::predict(const Vector& x) const {
  if (x.size() != W.cols()) throw DimensionMismatch("predict: feature length != p");
  return W * x + bias;
}

LinearModel LinearModel::zeros(int d, int p) {
  LinearModel m;
  m.W = Matrix::Zero(d, p);
  m.bias = Vector::Zero(d);
  return m;
}

void save_model(const LinearModel& m, const std::string& config_echo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.precision(17);
  out << "pear-model v1\n";
  out << "d=" << m.W.rows() << " p=" << m.W.cols() << "\n";
  out << "config: " << config_echo << "\n";
  out << "W";
  for (Eigen::Index i = 0; i < m.W.rows(); ++i)
    for (Eigen::Index j = 0; j < m.W.cols(); ++j) out << " " << m.W(i, j);
  out << "\nbias";
  for (Eigen::Index i = 0; i < m.bias.size(); ++i) out << " " << m.bias(i);
  out << "\n";
}

LinearModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::string tag;
  std::getline(in, tag);
  if (tag != "pear-model v1") throw std::runtime_error("load_model: unrecognized tag");
  std::string dims;
  std::getline(in, dims);
  int d = 0, p = 0;
  if (std::sscanf(dims.c_str(), "d=%d p=%d", &d, &p) != 2) {
    throw std::runtime_error("load_model: malformed dimensions");
  }
  std::string config_line;
  std::getline(in, config_line);
  LinearModel m = LinearModel::zeros(d, p);
  std::string word;
  in >> word;  // "W"
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < p; ++j) in >> m.W(i, j);
  in >> word;  // "bias"
  for (int i = 0; i < d; ++i) in >> m.bias(i);
  if (!in) throw std::runtime_error("load_model: truncated file");
  return m;
}

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::Pear: return "pear";
    case LossKind::Mse: return "mse";
    case LossKind::SpoPlus: return "spo_plus";
  }
  return "unknown";
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Patience: return "patience";
    case StopReason::TimeCap: return "time_cap";
    case StopReason::MaxEpochs: return "max_epochs";
  }
  return "unknown";
}

AdamState AdamState::init(Eigen::Index size) {
  AdamState s;
  s.m = Vector::Zero(size);
  s.v = Vector::Zero(size);
  return s;
}

void adam_step(AdamState& state, Eigen::Ref<Vector> params, const Vector& grad, double lr) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  if (params.size() != grad.size() || params.size() != state.m.size()) {
    throw DimensionMismatch("adam_step: shape mismatch");
  }
  ++state.step;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const Vector m_hat = state.m / c1;
  const Vector v_hat = state.v / c2;
  params -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

Vector grad_mse(const Vector& chat, const Vector& c) {
  if (chat.size() != c.size()) throw DimensionMismatch("grad_mse: length mismatch");
  return chat - c;
}

Vector grad_pear(ConvexInstance& inst, const Vector& chat, const Vector& c,
                 double lambda_smooth, double beta, const QpSettings& settings,
                 double active_tol) {
  if (inst.curvature.kind == Curvature::Kind::ScaledIdentity) {
    inst.curvature.lambda = lambda_smooth;
  }
  inst.set_natural_cost(chat);
  const PrimalDualSolution sol = solve(inst, settings);
  if (sol.status != SolveStatus::Solved) {
    throw std::runtime_error(std::string("grad_pear: forward solve failed (") +
                             to_string(sol.status) + ")");
  }
  const ActiveSet act = detect_active(inst, sol, active_tol);
  const ActiveJacobian jac = assemble_jacobian(inst, act);
  // The sign flip between natural and minimization costs cancels in P_H e,
  // so the error is projected directly in natural units.
  const Vector e = chat - c;
  if (inst.curvature.kind == Curvature::Kind::ScaledIdentity) {
    const PearGradient pg = pear_gradient_lp(inst.curvature.lambda, jac, e);
    return normal_inject(pg, beta);
  }
  // Normal injection is a smoothed-LP mechanism; quadratic tasks use the
  // plain projected gradient.
  const CurvatureOperator h(inst.curvature, inst.n);
  return pear_gradient(h, jac, e).g;
}

Vector grad_spo_plus(const Task& task, const Vector& chat, const Vector& c) {
  if (chat.size() != c.size()) throw DimensionMismatch("grad_spo_plus: length mismatch");
  const DecisionOutcome z_true = task.decide(c);
  const DecisionOutcome z_pert = task.decide(2.0 * chat - c);
  Vector g = 2.0 * (z_true.z - z_pert.z);
  // Derived in minimization convention; flip for maximization tasks so the
  // result is a descent direction for the natural predictions.
  if (task.sense == ObjectiveSense::Maximize) g = -g;
  return g;
}

double normalized_regret(const LinearModel& model, const Task& task, const Dataset& data,
                         const SplitView& view) {
  double total_regret = 0.0;
  double total_scale = 0.0;
  for (int i = view.begin; i < view.begin + view.count; ++i) {
    const Vector c = data.C.row(i).transpose();
    const Vector chat = model.predict(data.X.row(i).transpose());
    const DecisionOutcome best = task.decide(c);
    const DecisionOutcome picked = task.decide(chat);
    DecisionOutcome achieved;
    achieved.z = picked.z;
    achieved.objective_value = task.value_under(picked.z, c);
    total_regret += regret(best, achieved, task.sense);
    total_scale += std::abs(best.objective_value);
  }
  if (total_scale == 0.0) {
    throw ZeroDenominator("normalized_regret: total optimal value is zero");
  }
  return 100.0 * total_regret / total_scale;
}

double mean_squared_error(const LinearModel& model, const Dataset& data,
                          const SplitView& view) {
  double acc = 0.0;
  for (int i = view.begin; i < view.begin + view.count; ++i) {
    const Vector e =
        model.predict(data.X.row(i).transpose()) - data.C.row(i).transpose();
    acc += e.squaredNorm();
  }
  const double cells = static_cast<double>(view.count) * static_cast<double>(data.config.d);
  return cells > 0.0 ? acc / cells : 0.0;
}

FitResult fit(const Task& task, const Dataset& data, const SplitView& train_view,
              const SplitView& val_view, const TrainConfig& cfg) {
  const auto t0 = Clock::now();
  const int d = data.config.d;
  const int p = data.config.p;

  LinearModel model = LinearModel::zeros(d, p);
  // Start from the per-dimension mean cost: deterministic, and it avoids the
  // fully-degenerate vertex that an all-zero prediction produces on some
  // tasks (every bound weakly active, projected gradient identically zero).
  if (train_view.count > 0) {
    Vector mean = Vector::Zero(d);
    for (int i = train_view.begin; i < train_view.begin + train_view.count; ++i) {
      mean += data.C.row(i).transpose();
    }
    model.bias = mean / static_cast<double>(train_view.count);
  }

  FitResult result;
  result.model = model;
  AdamState adam = AdamState::init(static_cast<Eigen::Index>(d) * p + d);
  Vector params(static_cast<Eigen::Index>(d) * p + d);
  auto pack = [&](const LinearModel& m, Vector& out) {
    Eigen::Map<const Vector> w_flat(m.W.data(), m.W.size());
    out.head(m.W.size()) = w_flat;
    out.tail(m.bias.size()) = m.bias;
  };
  auto unpack = [&](const Vector& in, LinearModel& m) {
    Eigen::Map<const Matrix> w_flat(in.data(), d, p);
    m.W = w_flat;
    m.bias = in.tail(d);
  };
  pack(model, params);

  TrainHistory& hist = result.history;
  double best_val = kInf;
  int stale = 0;
  double lr = cfg.lr;
  ConvexInstance work_inst = task.instance;

  auto evaluate = [&](int epoch, double epoch_train_mse) {
    EvalRecord rec;
    rec.epoch = epoch;
    rec.wall_seconds = seconds_since(t0);
    rec.val_regret_pct = normalized_regret(model, task, data, val_view);
    rec.train_mse = epoch_train_mse;
    hist.evals.push_back(rec);
    return rec.val_regret_pct;
  };

  hist.stop = StopReason::MaxEpochs;
  if (cfg.max_seconds <= 0.0) {
    hist.stop = StopReason::TimeCap;
    const double val0 = evaluate(0, mean_squared_error(model, data, train_view));
    hist.best_val_regret_pct = val0;
    hist.wall_seconds = seconds_since(t0);
    return result;
  }

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double mse_acc = 0.0;
    int epoch_failures = 0;
    int seen = 0;
    for (int start = train_view.begin; start < train_view.begin + train_view.count;
         start += cfg.batch) {
      const int stop = std::min(start + cfg.batch, train_view.begin + train_view.count);
      Matrix grad_w = Matrix::Zero(d, p);
      Vector grad_b = Vector::Zero(d);
      int used = 0;
      for (int i = start; i < stop; ++i) {
        const Vector x = data.X.row(i).transpose();
        const Vector c = data.C.row(i).transpose();
        const Vector chat = model.predict(x);
        mse_acc += (chat - c).squaredNorm();
        ++seen;
        Vector gc;
        try {
          switch (cfg.loss) {
            case LossKind::Mse:
              gc = grad_mse(chat, c);
              break;
            case LossKind::Pear:
              gc = grad_pear(work_inst, chat, c, cfg.lambda_smooth, cfg.beta, cfg.solver);
              break;
            case LossKind::SpoPlus:
              gc = grad_spo_plus(task, chat, c);
              break;
          }
        } catch (const std::exception&) {
          ++epoch_failures;
          continue;  // failed samples are skipped and counted
        }
        grad_w += gc * x.transpose();
        grad_b += gc;
        ++used;
      }
      if (used == 0) continue;
      grad_w /= static_cast<double>(used);
      grad_b /= static_cast<double>(used);
      Vector grad_flat(static_cast<Eigen::Index>(d) * p + d);
      Eigen::Map<const Vector> gw_flat(grad_w.data(), grad_w.size());
      grad_flat.head(grad_w.size()) = gw_flat;
      grad_flat.tail(d) = grad_b;
      adam_step(adam, params, grad_flat, lr);
      unpack(params, model);
    }
    hist.failed_samples += epoch_failures;
    if (seen > 0 &&
        static_cast<double>(epoch_failures) > cfg.max_failed_fraction * seen) {
      throw std::runtime_error("fit: more than " +
                               std::to_string(100.0 * cfg.max_failed_fraction) +
                               "% of samples failed in one epoch");
    }

    if (epoch % cfg.eval_every == 0) {
      const double mse_epoch =
          seen > 0 ? mse_acc / (static_cast<double>(seen) * d) : 0.0;
      const double val = evaluate(epoch, mse_epoch);
      const bool improved_enough = val < best_val * (1.0 - cfg.improve_tol);
      if (val < best_val) {
        best_val = val;
        result.model = model;
      }
      if (improved_enough) {
        stale = 0;
      } else {
        ++stale;
        if (cfg.reduce_on_plateau && stale % 3 == 0) lr *= 0.5;
      }
      if (stale >= cfg.patience) {
        hist.stop = StopReason::Patience;
        break;
      }
      if (seconds_since(t0) >= cfg.max_seconds) {
        hist.stop = StopReason::TimeCap;
        break;
      }
    }
  }

  hist.best_val_regret_pct = best_val;
  hist.wall_seconds = seconds_since(t0);
  return result;
}

}  // namespace pear
