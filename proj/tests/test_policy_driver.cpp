#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "idrl/driver.hpp"
#include "test_util.hpp"

using namespace idrl;
using namespace idrl::test;

namespace {

TransitionDataset random_continuous(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Transition> ts(n);
  for (std::size_t i = 0; i < n; ++i) {
    ts[i].s = {g(rng), g(rng), g(rng)};
    ts[i].a = {g(rng), g(rng)};
    ts[i].r = g(rng);
    ts[i].s_next = {g(rng), g(rng), g(rng)};
    ts[i].done = false;
    ts[i].traj_id = static_cast<std::uint32_t>(i);
  }
  return TransitionDataset(3, 2, 0.9, "continuous", std::move(ts));
}

// n trajectories of fixed length with constant action and constant reward per
// trajectory: trajectory k has action (v_k, v_k) and reward r_k on every step.
TransitionDataset banded_trajectories(const std::vector<double>& rewards,
                                      const std::vector<double>& actions, int len,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Transition> ts;
  for (std::size_t k = 0; k < rewards.size(); ++k)
    for (int t = 0; t < len; ++t) {
      Transition tr;
      tr.s = {g(rng), g(rng)};
      tr.a = {actions[k], actions[k]};
      tr.r = rewards[k];
      tr.s_next = {g(rng), g(rng)};
      tr.done = t + 1 == len;
      tr.traj_id = static_cast<std::uint32_t>(k);
      tr.step = static_cast<std::uint32_t>(t);
      ts.push_back(tr);
    }
  return TransitionDataset(2, 2, 0.9, "banded", std::move(ts));
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("weighted BC loss gradients match finite differences") {
  const TransitionDataset ds = random_continuous(64, 11);
  GaussianPolicy pi(3, 2, {8, 8}, 5);
  for (double& l : pi.log_std()) l = -0.3;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> w(ds.size());
  for (double& x : w) x = u(rng);
  std::vector<std::size_t> batch(32);
  std::iota(batch.begin(), batch.end(), 0);

  std::vector<double> gmean, gstd;
  weighted_bc_grads(pi, ds, w, batch, gmean, gstd);

  const double h = 1e-6;
  auto& params = pi.mean_head().params();
  for (std::size_t p = 0; p < params.size(); p += 7) {
    const double orig = params[p];
    params[p] = orig + h;
    const double up = weighted_bc_loss(pi, ds, w, batch);
    params[p] = orig - h;
    const double down = weighted_bc_loss(pi, ds, w, batch);
    params[p] = orig;
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(gmean[p] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
  }
  for (std::size_t d = 0; d < pi.log_std().size(); ++d) {
    const double orig = pi.log_std()[d];
    pi.log_std()[d] = orig + h;
    const double up = weighted_bc_loss(pi, ds, w, batch);
    pi.log_std()[d] = orig - h;
    const double down = weighted_bc_loss(pi, ds, w, batch);
    pi.log_std()[d] = orig;
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(gstd[d] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("gaussian log-prob matches the closed form and sampling is seeded") {
  GaussianPolicy pi(2, 1, {4}, 3);
  pi.log_std()[0] = -0.5;
  const std::vector<double> s = {0.3, -0.7};
  const double m = pi.mean(s)[0];
  const double sd = std::exp(-0.5);
  const double a = m + 0.4;
  const double expect =
      -0.5 * (0.4 / sd) * (0.4 / sd) - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
  CHECK(pi.log_prob(s, {a}) == doctest::Approx(expect).epsilon(1e-12));

  std::mt19937_64 r1(9), r2(9);
  CHECK(pi.sample(s, r1) == pi.sample(s, r2));
}

TEST_CASE("policy save/load round trip preserves outputs") {
  GaussianPolicy pi(3, 2, {6, 6}, 7);
  pi.log_std() = {-0.2, 0.4};
  const std::string path = "policy_roundtrip.json";
  pi.save(path);
  const GaussianPolicy back = GaussianPolicy::load(path);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const std::vector<double> s = {g(rng), g(rng), g(rng)};
    const std::vector<double> a = {g(rng), g(rng)};
    CHECK(pi.mean(s) == back.mean(s));
    CHECK(pi.log_prob(s, a) == doctest::Approx(back.log_prob(s, a)).epsilon(1e-14));
  }
  std::remove(path.c_str());
}

TEST_CASE("weighted BC ignores zero-weight transitions") {
  // same states carry contradictory actions; the bad half is zero-weighted
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Transition> ts;
  std::vector<double> w;
  for (int i = 0; i < 200; ++i) {
    Transition t;
    t.s = {g(rng), g(rng)};
    const bool good = i % 2 == 0;
    t.a = {good ? 1.0 : -1.0};
    t.s_next = t.s;
    t.traj_id = static_cast<std::uint32_t>(i);
    ts.push_back(t);
    w.push_back(good ? 1.0 : 0.0);
  }
  const TransitionDataset ds(2, 1, 0.9, "contradictory", std::move(ts));
  BcConfig cfg;
  cfg.steps = 3000;
  cfg.lr = 1e-2;
  cfg.hidden = {8};
  const GaussianPolicy pi = weighted_bc(ds, w, cfg);
  for (int k = 0; k < 5; ++k) {
    const std::vector<double> s = {g(rng), g(rng)};
    CHECK(pi.mean(s)[0] == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("weighted BC is invariant to the overall weight scale") {
  const TransitionDataset ds = random_continuous(50, 21);
  BcConfig cfg;
  cfg.steps = 300;
  cfg.hidden = {6};
  const GaussianPolicy a = weighted_bc(ds, std::vector<double>(ds.size(), 1.0), cfg);
  const GaussianPolicy b = weighted_bc(ds, std::vector<double>(ds.size(), 100.0), cfg);
  const std::vector<double> s = {0.1, -0.2, 0.3};
  for (int d = 0; d < 2; ++d)
    CHECK(a.mean(s)[d] == doctest::Approx(b.mean(s)[d]).epsilon(1e-3));
}

TEST_CASE("weighted BC input validation") {
  const TransitionDataset ds = random_continuous(10, 1);
  BcConfig cfg;
  cfg.steps = 1;
  CHECK_THROWS_AS(weighted_bc(ds, std::vector<double>(3, 1.0), cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(weighted_bc(ds, std::vector<double>(10, 0.0), cfg),
                  std::invalid_argument);
  std::vector<double> neg(10, 1.0);
  neg[4] = -0.1;
  CHECK_THROWS_AS(weighted_bc(ds, neg, cfg), std::invalid_argument);
}

TEST_CASE("filtering keeps strictly-above-threshold weights") {
  const std::vector<double> w = {0.0, 0.5, 1.0, 0.0, 2.0};
  CHECK(filter_indices(w, 0.0) == std::vector<std::size_t>{1, 2, 4});
  CHECK(filter_indices(w, 0.5) == std::vector<std::size_t>{2, 4});
  CHECK(filter_indices(w, 5.0).empty());
  CHECK_THROWS_AS(filter_indices(w, -1.0), std::invalid_argument);

  const TransitionDataset ds = random_continuous(5, 3);
  const TransitionDataset kept = filter_dataset(ds, w, 0.0);
  CHECK(kept.size() == 3);
  CHECK(kept[0].s == ds[1].s);
  CHECK(kept.name().find("filtered") != std::string::npos);
  CHECK_THROWS_AS(filter_dataset(ds, w, 10.0), std::runtime_error);
  CHECK_THROWS_AS(filter_dataset(ds, std::vector<double>(2, 1.0), 0.0),
                  std::invalid_argument);
}

TEST_CASE("top-x BC clones only the best trajectories") {
  // 10 trajectories; the best one always plays action (+1,+1)
  std::vector<double> rewards(10), actions(10, -1.0);
  for (int k = 0; k < 10; ++k) rewards[k] = 0.1 * k;
  actions[9] = 1.0;  // highest-return trajectory
  const TransitionDataset ds = banded_trajectories(rewards, actions, 10, 13);
  BcConfig cfg;
  cfg.steps = 2000;
  cfg.lr = 1e-2;
  cfg.hidden = {8};
  const GaussianPolicy pi = top_x_bc(ds, 10.0, cfg);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    const std::vector<double> s = {g(rng), g(rng)};
    CHECK(pi.mean(s)[0] == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK_THROWS_AS(top_x_bc(ds, 0.0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(top_x_bc(ds, 101.0, cfg), std::invalid_argument);
}

TEST_CASE("optimal discriminator weighting suppresses non-expert transitions") {
  // offline data: half matches the expert action (+1), half is opposite
  std::vector<double> rewards(8, 0.0), actions(8, -1.0);
  for (int k = 0; k < 4; ++k) actions[k] = 1.0;
  const TransitionDataset offline = banded_trajectories(rewards, actions, 25, 17);
  const TransitionDataset expert =
      banded_trajectories(std::vector<double>(4, 1.0), std::vector<double>(4, 1.0), 25, 19);
  BcConfig cfg;
  cfg.steps = 2000;
  cfg.lr = 1e-2;
  cfg.hidden = {8};
  const DwbcResult res = optimal_dwbc(offline, expert, 1.0, cfg, 3000);
  double w_good = 0.0, w_bad = 0.0;
  for (std::size_t i = 0; i < offline.size(); ++i)
    (offline[i].a[0] > 0.0 ? w_good : w_bad) += res.weights[i];
  CHECK(w_good > 0.0);
  CHECK(w_bad <= 0.05 * w_good);
  const std::vector<double> s = {0.2, -0.1};
  CHECK(res.policy.mean(s)[0] == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS_AS(optimal_dwbc(offline, TransitionDataset(2, 2, 0.9, "empty", {}), 1.0, cfg),
                  std::invalid_argument);
}

TEST_CASE("the pipeline is deterministic given identical configs") {
  const TabularMDP m = detour2(0.9);
  const TransitionDataset ds = dataset_from_mdp(m, {0.25, 0.25, 0.25, 0.25}, 300, 7);
  IdrlConfig cfg;
  cfg.iterations = 2;
  cfg.backend = BackendSpec::tabular_index(m.n_states, m.n_actions);
  cfg.spec.mode = BlendMode::LambdaForm;
  cfg.spec.lambda = 0.6;
  cfg.dual.steps = 800;
  cfg.dual.lr = 5e-3;
  cfg.correction.steps = 800;
  cfg.correction.lr = 5e-3;
  cfg.bc.steps = 300;
  cfg.bc.hidden = {6};
  cfg.seed = 11;

  const IdrlResult r1 = run_idrl(ds, cfg);
  const IdrlResult r2 = run_idrl(ds, cfg);
  CHECK(r1.final_weights == r2.final_weights);
  CHECK(r1.final_dataset.size() == r2.final_dataset.size());
  CHECK(r1.policy.mean_head().params() == r2.policy.mean_head().params());
  CHECK(r1.policy.log_std() == r2.policy.log_std());
  REQUIRE(r1.reports.size() == 2);
  CHECK(r1.reports[1].retained == r2.reports[1].retained);

  // report CSVs are byte-identical (wall-clock timings live in a separate file)
  write_reports_csv(r1.reports, "rep_a.csv");
  write_reports_csv(r2.reports, "rep_b.csv");
  CHECK(slurp("rep_a.csv") == slurp("rep_b.csv"));
  std::remove("rep_a.csv");
  std::remove("rep_b.csv");
}

TEST_CASE("pipeline reports track retention and action-only mode skips the state ratio") {
  const TabularMDP m = detour2(0.9);
  const TransitionDataset ds = dataset_from_mdp(m, {0.25, 0.25, 0.25, 0.25}, 300, 9);
  IdrlConfig cfg;
  cfg.iterations = 1;
  cfg.backend = BackendSpec::tabular_index(m.n_states, m.n_actions);
  cfg.ratio_mode = RatioMode::ActionOnly;
  cfg.dual.steps = 500;
  cfg.dual.lr = 5e-3;
  cfg.bc.steps = 200;
  cfg.bc.hidden = {6};
  const IdrlResult r = run_idrl(ds, cfg);
  CHECK(r.reports.size() == 1);
  CHECK(r.reports[0].retained == ds.size());
  CHECK(r.final_ratios.state.empty());
  CHECK(r.final_ratios.combined == r.final_ratios.action);
  CHECK_THROWS_AS(run_idrl(ds, [] {
                    IdrlConfig bad;
                    bad.iterations = 0;
                    return bad;
                  }()),
                  std::invalid_argument);
}

TEST_CASE("evaluation is deterministic and records episode lengths") {
  GridworldSpec spec = default_gridworld();
  spec.max_episode_len = 12;
  GridworldEnv env(spec, 3);
  GaussianPolicy pi(2, 2, {6}, 2);
  const EvalResult a = evaluate_policy(env, pi, 10, 42, true);
  const EvalResult b = evaluate_policy(env, pi, 10, 42, true);
  CHECK(a.returns == b.returns);
  CHECK(a.steps == b.steps);
  REQUIRE(a.steps.size() == 10);
  for (int s : a.steps) {
    CHECK(s >= 1);
    CHECK(s <= 12);
  }
}
