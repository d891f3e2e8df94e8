#include <doctest.h>

#include <cmath>

#include "pear/experiment.hpp"
#include "pear/train.hpp"

using pear::Curvature;
using pear::LinearModel;
using pear::Matrix;
using pear::Vector;

namespace {

// Hand-unrolled Adam recurrence for a scalar parameter and a fixed gradient.
double adam_by_hand(double g, int steps, double lr) {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0, x = 0.0;
  for (int t = 1; t <= steps; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
  }
  return x;
}

pear::Dataset tiny_dataset(int d, int count, int deg = 2, std::uint64_t seed = 1) {
  pear::GenConfig cfg;
  cfg.d = d;
  cfg.deg = deg;
  cfg.seed = seed;
  cfg.train = count;
  cfg.val = count / 2;
  cfg.test = count / 2;
  return pear::generate(cfg);
}

}  // namespace

TEST_CASE("prediction is the affine map") {
  LinearModel id = LinearModel::zeros(2, 2);
  id.W = Matrix::Identity(2, 2);
  Vector x(2);
  x << 1, 2;
  CHECK((id.predict(x) - x).cwiseAbs().maxCoeff() == 0.0);

  LinearModel constant = LinearModel::zeros(2, 2);
  constant.bias << 3, -1;
  CHECK((constant.predict(x) - constant.bias).cwiseAbs().maxCoeff() == 0.0);

  LinearModel affine = LinearModel::zeros(1, 2);
  affine.W << 1, 1;
  affine.bias << 0.5;
  CHECK(affine.predict(x)(0) == doctest::Approx(3.5));
}

TEST_CASE("mse gradient is the raw error") {
  Vector c(2), chat(2);
  c << 1, 1;
  chat << 2, 0;
  CHECK(pear::grad_mse(c, c).cwiseAbs().maxCoeff() == 0.0);
  const Vector g = pear::grad_mse(chat, c);
  CHECK(g(0) == doctest::Approx(1.0));
  CHECK(g(1) == doctest::Approx(-1.0));
  CHECK((pear::grad_mse(Vector(2.0 * chat), Vector(2.0 * c)) - 2.0 * g).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("adam matches the hand-unrolled recurrence") {
  pear::AdamState st = pear::AdamState::init(1);
  Vector params = Vector::Zero(1);

  // A zero gradient never moves the parameters.
  for (int t = 0; t < 5; ++t) pear::adam_step(st, params, Vector::Zero(1), 0.1);
  CHECK(params(0) == 0.0);

  st = pear::AdamState::init(1);
  params.setZero();
  const Vector g = Vector::Constant(1, 0.7);
  pear::adam_step(st, params, g, 0.1);
  CHECK(params(0) == doctest::Approx(adam_by_hand(0.7, 1, 0.1)).epsilon(1e-14));
  const double first_step = -params(0);
  CHECK(first_step == doctest::Approx(0.1).epsilon(1e-6));  // first-step magnitude ~ lr

  pear::adam_step(st, params, g, 0.1);
  CHECK(params(0) == doctest::Approx(adam_by_hand(0.7, 2, 0.1)).epsilon(1e-14));
  const double second_step = -(params(0) - (-first_step));
  // With a constant gradient the bias-corrected step never grows.
  CHECK(second_step <= first_step + 1e-12);
}

TEST_CASE("pear gradient on a budget-constrained quadratic") {
  pear::MvoProblem p;
  p.n = 2;
  p.sigma = Matrix::Identity(2, 2) * 0.5;  // H = I
  p.risk_aversion = 2.0;
  p.lower_bound = -pear::kInf;
  auto inst = pear::build_mvo(p);

  Vector mu(2), mu_hat(2);
  mu << 0.5, 0.2;
  mu_hat = mu;
  CHECK(pear::grad_pear(inst, mu_hat, mu, 0.1, 0.1).cwiseAbs().maxCoeff() < 1e-7);

  mu_hat << 1.5, 0.2;  // error (1, 0) against the budget row J = [1 1]
  const Vector g = pear::grad_pear(inst, mu_hat, mu, 0.1, 0.1);
  CHECK(g(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(g(1) == doctest::Approx(-0.5).epsilon(1e-6));

  // Perturbing along J^T v leaves the gradient unchanged (the equality row
  // is always active).
  Vector shifted = mu_hat + 0.05 * Vector::Ones(2);
  const Vector g2 = pear::grad_pear(inst, shifted, mu, 0.1, 0.1);
  CHECK((g2 - g).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("spo-plus subgradient follows the two-solve formula") {
  pear::KnapsackProblem p;
  p.n = 2;
  p.weights = {1, 1};
  p.capacity_ratio = 0.5;  // capacity 1
  const pear::Task task = pear::make_knapsack_task(p, 0.1);

  Vector c(2), chat(2);
  c << 3, 2;
  chat = c;
  CHECK(pear::grad_spo_plus(task, chat, c).cwiseAbs().maxCoeff() == 0.0);

  chat << 1, 5;
  const Vector g = pear::grad_spo_plus(task, chat, c);
  // In minimization convention: 2 ((1,0) - (0,1)) = (2, -2).
  const Vector min_conv = task.instance.cost_sign * g;
  CHECK(min_conv(0) == doctest::Approx(2.0));
  CHECK(min_conv(1) == doctest::Approx(-2.0));

  // Joint positive scaling keeps both argmins unchanged.
  const Vector g_scaled = pear::grad_spo_plus(task, Vector(3.0 * chat), Vector(3.0 * c));
  CHECK((g_scaled - g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit on least squares reduces training error quickly") {
  const pear::Dataset data = tiny_dataset(4, 60);
  const auto sp = pear::split(data);
  pear::GridPathProblem grid;
  grid.rows = 2;
  grid.cols = 3;  // 7 edges; unused cost dim must match d
  pear::Task task;
  {
    pear::KnapsackProblem kp;
    kp.n = 4;
    kp.weights = {3, 4, 5, 6};
    kp.capacity_ratio = 0.5;
    task = pear::make_knapsack_task(kp, 0.1);
  }
  pear::TrainConfig cfg;
  cfg.loss = pear::LossKind::Mse;
  cfg.lr = 0.05;
  cfg.batch = 16;
  cfg.max_epochs = 5;
  cfg.patience = 100;
  const auto fitted = pear::fit(task, data, sp.train, sp.val, cfg);
  REQUIRE(fitted.history.evals.size() >= 2);
  CHECK(fitted.history.evals.back().train_mse < fitted.history.evals.front().train_mse);
}

TEST_CASE("a zero time budget returns the initial model") {
  const pear::Dataset data = tiny_dataset(4, 20);
  const auto sp = pear::split(data);
  pear::KnapsackProblem kp;
  kp.n = 4;
  kp.weights = {3, 4, 5, 6};
  kp.capacity_ratio = 0.5;
  const pear::Task task = pear::make_knapsack_task(kp, 0.1);
  pear::TrainConfig cfg;
  cfg.loss = pear::LossKind::Mse;
  cfg.max_seconds = 0.0;
  const auto fitted = pear::fit(task, data, sp.train, sp.val, cfg);
  CHECK(fitted.history.stop == pear::StopReason::TimeCap);
  CHECK(fitted.history.evals.size() == 1);
  CHECK(fitted.model.W.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero learning rate leaves the weights unchanged but records history") {
  const pear::Dataset data = tiny_dataset(4, 20);
  const auto sp = pear::split(data);
  pear::KnapsackProblem kp;
  kp.n = 4;
  kp.weights = {3, 4, 5, 6};
  kp.capacity_ratio = 0.5;
  const pear::Task task = pear::make_knapsack_task(kp, 0.1);
  pear::TrainConfig cfg;
  cfg.loss = pear::LossKind::Pear;
  cfg.lr = 0.0;
  cfg.max_epochs = 2;
  cfg.patience = 100;
  const auto fitted = pear::fit(task, data, sp.train, sp.val, cfg);
  CHECK(fitted.model.W.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fitted.history.evals.size() == 2);
}

TEST_CASE("normalized regret matches a single-instance computation") {
  pear::KnapsackProblem p;
  p.n = 2;
  p.weights = {1, 1};
  p.capacity_ratio = 0.5;
  const pear::Task task = pear::make_knapsack_task(p, 0.1);

  pear::Dataset data;
  data.config.p = 5;
  data.config.d = 2;
  data.config.train = 0;
  data.config.val = 0;
  data.config.test = 1;
  data.X = Matrix::Zero(1, 5);
  data.C = Matrix(1, 2);
  data.C << 3, 2;

  LinearModel model = LinearModel::zeros(2, 5);
  model.bias << 1, 5;  // picks the wrong item: regret 1 of optimum 3
  const double pct = pear::normalized_regret(model, task, data, {0, 1});
  CHECK(pct == doctest::Approx(100.0 / 3.0));

  LinearModel perfect = LinearModel::zeros(2, 5);
  perfect.bias << 3, 2;
  CHECK(pear::normalized_regret(perfect, task, data, {0, 1}) == doctest::Approx(0.0));

  // Scaling every true cost leaves the percentage unchanged.
  pear::Dataset doubled = data;
  doubled.C *= 2.0;
  LinearModel model2 = model;
  CHECK(pear::normalized_regret(model2, task, doubled, {0, 1}) == doctest::Approx(pct));
}

TEST_CASE("model files round-trip") {
  LinearModel m = LinearModel::zeros(3, 2);
  m.W << 1, 2, 3, 4, 5, 6;
  m.bias << -1, 0.25, 9;
  const std::string path = "test_model_roundtrip.txt";
  pear::save_model(m, "loss=mse lr=0.01", path);
  const LinearModel back = pear::load_model(path);
  CHECK((back.W - m.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.bias - m.bias).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}
