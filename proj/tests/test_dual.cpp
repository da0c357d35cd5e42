#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "idrl/dual.hpp"
#include "test_util.hpp"

using namespace idrl;
using namespace idrl::test;

namespace {

TransitionDataset random_continuous(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.15);
  std::vector<Transition> ts(n);
  for (std::size_t i = 0; i < n; ++i) {
    ts[i].s = {g(rng), g(rng), g(rng)};
    ts[i].a = {g(rng), g(rng)};
    ts[i].r = g(rng);
    ts[i].s_next = {g(rng), g(rng), g(rng)};
    ts[i].done = coin(rng);
    ts[i].traj_id = static_cast<std::uint32_t>(i);
  }
  return TransitionDataset(3, 2, 0.9, "continuous", std::move(ts));
}

template <typename LossFn>
void check_grad_fd(std::vector<double>& params, const std::vector<double>& grad,
                   LossFn loss, std::size_t stride = 5) {
  const double h = 1e-6;
  for (std::size_t p = 0; p < params.size(); p += stride) {
    const double orig = params[p];
    params[p] = orig + h;
    const double up = loss();
    params[p] = orig - h;
    const double down = loss();
    params[p] = orig;
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(grad[p] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace

TEST_CASE("v_loss and q_loss gradients match finite differences") {
  const TransitionDataset ds = random_continuous(64, 3);
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    DivergenceSpec spec;
    spec.mode = seed == 0 ? BlendMode::LambdaForm : BlendMode::AlphaForm;
    spec.lambda = 0.6;
    spec.alpha = 0.5;
    DualTrainState st = make_dual_state(ds, BackendSpec::network({8, 8}), spec, cfg);
    std::vector<std::size_t> batch(32);
    std::iota(batch.begin(), batch.end(), 0);

    const auto gv = v_loss_grad(st, ds, batch);
    check_grad_fd(st.v->params(), gv, [&] { return v_loss(st, ds, batch); });

    const auto gq = q_loss_grad(st, ds, batch);
    check_grad_fd(st.q->params(), gq, [&] { return q_loss(st, ds, batch); });
  }
}

TEST_CASE("orthogonal-gradient mode yields finite descent directions") {
  const TransitionDataset ds = random_continuous(64, 5);
  TrainConfig cfg;
  DivergenceSpec spec;
  DualTrainState st = make_dual_state(ds, BackendSpec::network({8, 8}), spec, cfg);
  std::vector<std::size_t> batch(32);
  std::iota(batch.begin(), batch.end(), 0);
  const auto g = orthogonal_grad_mode(st, ds, batch, 1.0);
  CHECK(g.size() == st.v->params().size());
  double norm = 0.0;
  for (double x : g) {
    CHECK(std::isfinite(x));
    norm += x * x;
  }
  CHECK(norm > 0.0);
}

TEST_CASE("tabular dual training reaches the closed-form micro fixed point") {
  // single state, two actions, gamma=0, r=(1,0), mu uniform, alpha=0.25
  const TabularMDP m = corrupt2();
  const TransitionDataset ds = dataset_from_mdp(m, {0.5, 0.5}, 200, 1);
  DivergenceSpec spec;
  spec.mode = BlendMode::AlphaForm;
  spec.alpha = 0.25;
  TrainConfig cfg;
  cfg.steps = 30000;
  cfg.lr = 5e-3;
  cfg.seed = 2;
  DualTrainState st =
      train_dual(ds, BackendSpec::tabular_index(m.n_states, m.n_actions), spec, cfg);

  const FixedPointResult oracle = semi_gradient_fixed_point(m, uniform_policy(m), 0.25);
  CHECK(st.v->value(std::vector<double>{0.0}) ==
        doctest::Approx(oracle.V[0]).epsilon(2e-3));
  CHECK(action_ratio(st, {0.0}, {0.0}) == doctest::Approx(2.0).epsilon(2e-3));
  CHECK(action_ratio(st, {0.0}, {1.0}) == doctest::Approx(0.0).epsilon(2e-3));
}

TEST_CASE("alpha-form stationarity: per-state conditional mean of the ratio is 1") {
  const TabularMDP m = detour2(0.9);
  const std::vector<double> dD = {0.25, 0.25, 0.25, 0.25};
  const TransitionDataset ds = dataset_from_mdp(m, dD, 400, 7);
  DivergenceSpec spec;
  spec.mode = BlendMode::AlphaForm;
  spec.alpha = 1.0;
  TrainConfig cfg;
  cfg.steps = 40000;
  cfg.lr = 5e-3;
  cfg.seed = 3;
  DualTrainState st =
      train_dual(ds, BackendSpec::tabular_index(m.n_states, m.n_actions), spec, cfg);
  for (int s = 0; s < m.n_states; ++s) {
    double mean = 0.0;
    for (int a = 0; a < m.n_actions; ++a)
      mean += 0.5 * action_ratio(st, {static_cast<double>(s)}, {static_cast<double>(a)});
    CHECK(mean == doctest::Approx(1.0).epsilon(5e-3));
  }
}

TEST_CASE("lambda-form stationarity and the policy-ratio rescale") {
  const TabularMDP m = corrupt2();
  const TransitionDataset ds = dataset_from_mdp(m, {0.5, 0.5}, 200, 4);
  DivergenceSpec spec;
  spec.mode = BlendMode::LambdaForm;
  spec.lambda = 0.6;
  TrainConfig cfg;
  cfg.steps = 30000;
  cfg.lr = 5e-3;
  cfg.seed = 5;
  DualTrainState st =
      train_dual(ds, BackendSpec::tabular_index(m.n_states, m.n_actions), spec, cfg);
  // lambda-form fixed point: E_mu[max(0,(Q-V)/2+1)] = (1-lambda)/lambda
  const double mean_raw =
      0.5 * (action_ratio(st, {0.0}, {0.0}) + action_ratio(st, {0.0}, {1.0}));
  CHECK(mean_raw == doctest::Approx((1.0 - 0.6) / 0.6).epsilon(5e-3));
  const double mean_policy =
      0.5 * (policy_ratio(st, {0.0}, {0.0}) + policy_ratio(st, {0.0}, {1.0}));
  CHECK(mean_policy == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("divergence guard aborts exploding runs") {
  // huge rewards and learning rate push mean |V| over the configured bound
  TransitionDataset base = random_continuous(64, 9);
  std::vector<Transition> ts = base.transitions();
  for (Transition& t : ts) t.r *= 1e4;
  const TransitionDataset ds = base.with_transitions(std::move(ts), "exploding");
  TrainConfig cfg;
  cfg.steps = 4000;
  cfg.lr = 1.0;
  cfg.divergence_bound = 50.0;
  cfg.log_every = 50;
  DivergenceSpec spec;
  spec.mode = BlendMode::AlphaForm;
  spec.alpha = 1.0;
  CHECK_THROWS_AS(train_dual(ds, BackendSpec::network({8, 8}), spec, cfg),
                  std::runtime_error);
}

TEST_CASE("training curve is recorded and dumps as csv") {
  const TabularMDP m = corrupt2();
  const TransitionDataset ds = dataset_from_mdp(m, {0.5, 0.5}, 50, 1);
  TrainConfig cfg;
  cfg.steps = 500;
  cfg.log_every = 100;
  DivergenceSpec spec;
  DualTrainState st =
      train_dual(ds, BackendSpec::tabular_index(m.n_states, m.n_actions), spec, cfg);
  CHECK(st.curve.size() == 5);
  const std::string path = "curve_dump.csv";
  write_curve_csv(st.curve, path, "v_loss", "q_loss");
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header.find("v_loss") != std::string::npos);
  f.close();
  std::remove(path.c_str());
}
