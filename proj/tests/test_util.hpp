#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <random>
#include <vector>

#include "idrl/gridworld.hpp"
#include "idrl/oracle.hpp"

namespace idrl::test {

// Single state, two self-loop actions, r = (1, 0), gamma = 0.
inline TabularMDP corrupt2() {
  TabularMDP m;
  m.n_states = 1;
  m.n_actions = 2;
  m.P = {{{1.0}, {1.0}}};
  m.R = {{1.0, 0.0}};
  m.d0 = {1.0};
  m.gamma = 0.0;
  return m;
}

// Two-state chain: action 0 advances, state 1 absorbs.
inline TabularMDP chain2(double gamma = 0.5) {
  TabularMDP m;
  m.n_states = 2;
  m.n_actions = 1;
  m.P = {{{0.0, 1.0}}, {{0.0, 1.0}}};
  m.R = {{0.0}, {1.0}};
  m.d0 = {1.0, 0.0};
  m.gamma = gamma;
  return m;
}

// Two states, two actions. In s0, action 0 stays in the rewarding loop and
// action 1 drops into low-value s1, from which both actions return to s0.
inline TabularMDP detour2(double gamma = 0.9) {
  TabularMDP m;
  m.n_states = 2;
  m.n_actions = 2;
  m.P = {{{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 0.0}, {1.0, 0.0}}};
  m.R = {{1.0, 0.0}, {0.0, 0.1}};
  m.d0 = {1.0, 0.0};
  m.gamma = gamma;
  return m;
}

// Random ergodic MDP with strictly positive transition kernel.
inline TabularMDP random_mdp(int n_states, int n_actions, double gamma,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  TabularMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.P.assign(n_states, std::vector<std::vector<double>>(
                           n_actions, std::vector<double>(n_states, 0.0)));
  m.R.assign(n_states, std::vector<double>(n_actions, 0.0));
  m.d0.assign(n_states, 1.0 / n_states);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double tot = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        m.P[s][a][s2] = u(rng);
        tot += m.P[s][a][s2];
      }
      for (int s2 = 0; s2 < n_states; ++s2) m.P[s][a][s2] /= tot;
      m.R[s][a] = u(rng);
    }
  return m;
}

inline std::vector<std::vector<double>> uniform_policy(const TabularMDP& m) {
  return std::vector<std::vector<double>>(
      m.n_states, std::vector<double>(m.n_actions, 1.0 / m.n_actions));
}

// Deterministic transition counts proportional to weights (largest remainder),
// so the empirical (s,a) histogram matches the target distribution as closely
// as N allows.
inline std::vector<std::size_t> apportion(const std::vector<double>& weights,
                                          std::size_t n) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / total * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    rema.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n && k < rema.size(); ++k) {
    if (weights[rema[k].second] == 0.0) continue;
    ++counts[rema[k].second];
    ++assigned;
  }
  return counts;
}

// i.i.d.-style dataset over flattened (s,a) weights; next states sampled from
// P. States/actions are stored as single-index vectors for tabular backends.
inline TransitionDataset dataset_from_mdp(const TabularMDP& m,
                                          const std::vector<double>& d_sa,
                                          std::size_t n, std::uint64_t seed,
                                          const std::string& name = "tabular") {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::size_t> counts = apportion(d_sa, n);
  std::vector<Transition> ts;
  std::uint32_t id = 0;
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      const std::size_t c = counts[static_cast<std::size_t>(s) * m.n_actions + a];
      for (std::size_t k = 0; k < c; ++k) {
        double roll = u(rng), acc = 0.0;
        int s2 = m.n_states - 1;
        for (int j = 0; j < m.n_states; ++j) {
          acc += m.P[s][a][j];
          if (roll <= acc) {
            s2 = j;
            break;
          }
        }
        Transition t;
        t.s = {static_cast<double>(s)};
        t.a = {static_cast<double>(a)};
        t.r = m.R[s][a];
        t.s_next = {static_cast<double>(s2)};
        t.done = false;
        t.traj_id = id++;
        t.step = 0;
        ts.push_back(std::move(t));
      }
    }
  return TransitionDataset(1, 1, m.gamma, name, std::move(ts));
}

// Empirical flattened (s,a) histogram of a single-index tabular dataset.
inline std::vector<double> empirical_dsa(const TransitionDataset& ds, int n_states,
                                         int n_actions) {
  std::vector<double> h(static_cast<std::size_t>(n_states) * n_actions, 0.0);
  for (const Transition& t : ds.transitions()) {
    const int s = static_cast<int>(std::llround(t.s[0]));
    const int a = static_cast<int>(std::llround(t.a[0]));
    h[static_cast<std::size_t>(s) * n_actions + a] += 1.0;
  }
  for (double& x : h) x /= static_cast<double>(ds.size());
  return h;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace idrl::test
