#include "idrl/gridworld.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace idrl {

void TabularMDP::validate() const {
  if (n_states <= 0 || n_actions <= 0)
    throw std::invalid_argument("TabularMDP: sizes must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("TabularMDP: gamma must be in [0,1)");
  double d0_sum = 0.0;
  for (double p : d0) {
    if (p < 0.0) throw std::invalid_argument("TabularMDP: negative d0 entry");
    d0_sum += p;
  }
  if (std::abs(d0_sum - 1.0) > 1e-12)
    throw std::invalid_argument("TabularMDP: d0 does not sum to 1");
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double row = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        if (P[s][a][s2] < 0.0) throw std::invalid_argument("TabularMDP: negative P entry");
        row += P[s][a][s2];
      }
      if (std::abs(row - 1.0) > 1e-12)
        throw std::invalid_argument("TabularMDP: P row does not sum to 1");
    }
}

GridworldSpec default_gridworld() {
  GridworldSpec s;
  s.width = 5;
  s.height = 5;
  s.start_cell = 0;
  s.goal_cell = 24;
  return s;
}

namespace {

void validate_spec(const GridworldSpec& spec) {
  const int n = spec.width * spec.height;
  if (spec.width <= 0 || spec.height <= 0)
    throw std::invalid_argument("gridworld: non-positive size");
  if (spec.start_cell < 0 || spec.start_cell >= n || spec.goal_cell < 0 ||
      spec.goal_cell >= n)
    throw std::invalid_argument("gridworld: start/goal out of range");
  if (spec.start_cell == spec.goal_cell)
    throw std::invalid_argument("gridworld: start equals goal");
  if (spec.noise_scale < 0.0)
    throw std::invalid_argument("gridworld: negative noise scale");
  if (!(spec.gamma >= 0.0 && spec.gamma < 1.0))
    throw std::invalid_argument("gridworld: gamma must be in [0,1)");
  for (int b : spec.blocked)
    if (b == spec.start_cell || b == spec.goal_cell)
      throw std::invalid_argument("gridworld: start/goal blocked");
}

bool blocked(const GridworldSpec& spec, int cell) {
  return std::find(spec.blocked.begin(), spec.blocked.end(), cell) != spec.blocked.end();
}

// Deterministic move on the grid skeleton; bumps stay in place.
int skeleton_move(const GridworldSpec& spec, int cell, int dir) {
  const int x = cell % spec.width;
  const int y = cell / spec.width;
  int nx = x, ny = y;
  switch (dir) {
    case 0: ++nx; break;
    case 1: --nx; break;
    case 2: ++ny; break;
    case 3: --ny; break;
    default: throw std::invalid_argument("bad direction");
  }
  if (nx < 0 || nx >= spec.width || ny < 0 || ny >= spec.height) return cell;
  const int next = ny * spec.width + nx;
  return blocked(spec, next) ? cell : next;
}

}  // namespace

int gridworld_shortest_path(const GridworldSpec& spec) {
  const int n = spec.width * spec.height;
  std::vector<int> dist(n, -1);
  std::deque<int> q{spec.start_cell};
  dist[spec.start_cell] = 0;
  while (!q.empty()) {
    const int c = q.front();
    q.pop_front();
    for (int dir = 0; dir < 4; ++dir) {
      const int nc = skeleton_move(spec, c, dir);
      if (dist[nc] < 0) {
        dist[nc] = dist[c] + 1;
        q.push_back(nc);
      }
    }
  }
  return dist[spec.goal_cell];
}

GridworldEnv::GridworldEnv(GridworldSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(seed) {
  validate_spec(spec_);
  if (gridworld_shortest_path(spec_) < 0)
    throw std::invalid_argument("gridworld: goal unreachable from start");
}

bool GridworldEnv::is_blocked(int cell) const { return blocked(spec_, cell); }

std::vector<double> GridworldEnv::observe(int cell) {
  const double x = cell % spec_.width + 0.5;
  const double y = cell / spec_.width + 0.5;
  std::uniform_real_distribution<double> noise(-spec_.noise_scale, spec_.noise_scale);
  return {x + noise(rng_), y + noise(rng_)};
}

std::vector<double> GridworldEnv::reset() {
  cell_ = spec_.start_cell;
  steps_ = 0;
  return observe(cell_);
}

int GridworldEnv::direction_of(const std::vector<double>& action) {
  if (action.size() != 2) throw std::invalid_argument("gridworld action must be 2-D");
  const double ax = action[0], ay = action[1];
  if (std::abs(ax) >= std::abs(ay)) return ax >= 0.0 ? 0 : 1;
  return ay >= 0.0 ? 2 : 3;
}

std::vector<double> GridworldEnv::direction_vector(int dir) {
  switch (dir) {
    case 0: return {1.0, 0.0};
    case 1: return {-1.0, 0.0};
    case 2: return {0.0, 1.0};
    case 3: return {0.0, -1.0};
  }
  throw std::invalid_argument("bad direction");
}

GridworldEnv::StepResult GridworldEnv::step(const std::vector<double>& action) {
  const int dir = direction_of(action);
  const int next = skeleton_move(spec_, cell_, dir);
  cell_ = next;
  ++steps_;
  const bool done = next == spec_.goal_cell;
  const double r = done ? spec_.goal_reward : spec_.step_reward;
  return {observe(next), r, done};
}

int GridworldEnv::cell_of(const std::vector<double>& state) const {
  if (state.size() != 2) throw std::invalid_argument("gridworld state must be 2-D");
  const int x = std::clamp(static_cast<int>(std::floor(state[0])), 0, spec_.width - 1);
  const int y = std::clamp(static_cast<int>(std::floor(state[1])), 0, spec_.height - 1);
  return y * spec_.width + x;
}

TabularMDP gridworld_mdp(const GridworldSpec& spec) {
  validate_spec(spec);
  if (gridworld_shortest_path(spec) < 0)
    throw std::invalid_argument("gridworld: goal unreachable from start");
  const int n = spec.width * spec.height;
  TabularMDP mdp;
  mdp.n_states = n;
  mdp.n_actions = 4;
  mdp.gamma = spec.gamma;
  mdp.P.assign(n, std::vector<std::vector<double>>(4, std::vector<double>(n, 0.0)));
  mdp.R.assign(n, std::vector<double>(4, 0.0));
  mdp.d0.assign(n, 0.0);
  mdp.d0[spec.start_cell] = 1.0;
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < 4; ++a) {
      if (s == spec.goal_cell || blocked(spec, s)) {
        mdp.P[s][a][s] = 1.0;  // absorbing
        continue;
      }
      const int next = skeleton_move(spec, s, a);
      mdp.P[s][a][next] = 1.0;
      mdp.R[s][a] = next == spec.goal_cell ? spec.goal_reward : spec.step_reward;
    }
  mdp.validate();
  return mdp;
}

TransitionDataset collect_random(GridworldEnv& env, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("collect_random: n must be > 0");
  env.reseed(seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<Transition> out;
  out.reserve(n);
  std::uint32_t traj = 0;
  std::uint32_t step = 0;
  std::vector<double> s = env.reset();
  while (out.size() < n) {
    const std::vector<double> a = GridworldEnv::direction_vector(pick(rng));
    auto res = env.step(a);
    out.push_back({s, a, res.reward, res.s_next, res.done, traj, step});
    ++step;
    if (res.done || static_cast<int>(step) >= env.spec().max_episode_len) {
      s = env.reset();
      ++traj;
      step = 0;
    } else {
      s = res.s_next;
    }
  }
  return TransitionDataset(2, 2, env.spec().gamma, "gridworld-random", std::move(out));
}

TransitionDataset collect_expert(GridworldEnv& env, std::size_t n, std::uint64_t seed,
                                 double epsilon) {
  if (n == 0) throw std::invalid_argument("collect_expert: n must be > 0");
  const TabularMDP mdp = gridworld_mdp(env.spec());
  const std::vector<int> greedy = value_iteration_policy(mdp);
  env.reseed(seed);
  std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbull);
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Transition> out;
  out.reserve(n);
  std::uint32_t traj = 0, step = 0;
  std::vector<double> s = env.reset();
  while (out.size() < n) {
    int dir = greedy[env.current_cell()];
    if (epsilon > 0.0 && coin(rng) < epsilon) dir = pick(rng);
    const std::vector<double> a = GridworldEnv::direction_vector(dir);
    auto res = env.step(a);
    out.push_back({s, a, res.reward, res.s_next, res.done, traj, step});
    ++step;
    if (res.done || static_cast<int>(step) >= env.spec().max_episode_len) {
      s = env.reset();
      ++traj;
      step = 0;
    } else {
      s = res.s_next;
    }
  }
  return TransitionDataset(2, 2, env.spec().gamma, "gridworld-expert", std::move(out));
}

std::vector<int> value_iteration_policy(const TabularMDP& mdp, int iters, double tol) {
  std::vector<double> V(mdp.n_states, 0.0);
  for (int it = 0; it < iters; ++it) {
    double delta = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a) {
        double q = mdp.R[s][a];
        for (int s2 = 0; s2 < mdp.n_states; ++s2)
          if (mdp.P[s][a][s2] > 0.0) q += mdp.gamma * mdp.P[s][a][s2] * V[s2];
        best = std::max(best, q);
      }
      delta = std::max(delta, std::abs(best - V[s]));
      V[s] = best;
    }
    if (delta < tol) break;
  }
  std::vector<int> policy(mdp.n_states, 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions; ++a) {
      double q = mdp.R[s][a];
      for (int s2 = 0; s2 < mdp.n_states; ++s2)
        if (mdp.P[s][a][s2] > 0.0) q += mdp.gamma * mdp.P[s][a][s2] * V[s2];
      if (q > best) {
        best = q;
        policy[s] = a;
      }
    }
  }
  return policy;
}

std::vector<double> policy_state_values(const TabularMDP& mdp,
                                        const std::vector<std::vector<double>>& policy) {
  const int n = mdp.n_states;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pa = policy[s][a];
      if (pa == 0.0) continue;
      b(s) += pa * mdp.R[s][a];
      for (int s2 = 0; s2 < n; ++s2)
        A(s, s2) -= mdp.gamma * pa * mdp.P[s][a][s2];
    }
  Eigen::VectorXd v = A.partialPivLu().solve(b);
  return std::vector<double>(v.data(), v.data() + n);
}

}  // namespace idrl
