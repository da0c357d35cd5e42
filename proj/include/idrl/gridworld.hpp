#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "idrl/dataset.hpp"

namespace idrl {

// Enumerated dynamics/reward model. P indexed [s][a][s'], R indexed [s][a].
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<std::vector<std::vector<double>>> P;
  std::vector<std::vector<double>> R;
  std::vector<double> d0;
  double gamma = 0.99;

  void validate() const;
};

struct GridworldSpec {
  int width = 5;
  int height = 5;
  int start_cell = 0;           // row-major cell index
  int goal_cell = 24;
  std::vector<int> blocked;
  double step_reward = 0.0;
  double goal_reward = 1.0;
  double noise_scale = 0.1;     // fraction of a cell width
  int max_episode_len = 50;
  double gamma = 0.99;          // discount for the MDP model and datasets
};

GridworldSpec default_gridworld();

// Continuous-state wrapper over a discrete grid skeleton. States are cell
// centers plus uniform noise; a 2-D action moves one cell along its dominant
// axis. Holds per-episode state: one instance per thread.
class GridworldEnv {
 public:
  explicit GridworldEnv(GridworldSpec spec, std::uint64_t seed = 0);

  const GridworldSpec& spec() const { return spec_; }
  std::vector<double> reset();
  // Returns (s_next, reward, done).
  struct StepResult {
    std::vector<double> s_next;
    double reward;
    bool done;
  };
  StepResult step(const std::vector<double>& action);

  int cell_of(const std::vector<double>& state) const;
  std::vector<double> observe(int cell);  // cell center + noise
  int current_cell() const { return cell_; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  // Direction index 0..3 (right,left,up,down) from the dominant action axis.
  static int direction_of(const std::vector<double>& action);
  static std::vector<double> direction_vector(int dir);

 private:
  GridworldSpec spec_;
  std::mt19937_64 rng_;
  int cell_ = 0;
  int steps_ = 0;
  bool is_blocked(int cell) const;
};

// Exact tabular abstraction of the grid skeleton: 4 actions, deterministic
// moves, absorbing goal with zero reward. Throws if the goal is unreachable.
TabularMDP gridworld_mdp(const GridworldSpec& spec);

// Shortest path length (in moves) from start to goal; -1 if unreachable.
int gridworld_shortest_path(const GridworldSpec& spec);

TransitionDataset collect_random(GridworldEnv& env, std::size_t n, std::uint64_t seed);

// Rollouts of the value-iteration-optimal discrete policy (with epsilon noise).
TransitionDataset collect_expert(GridworldEnv& env, std::size_t n, std::uint64_t seed,
                                 double epsilon = 0.0);

// Greedy policy table from value iteration on a TabularMDP.
std::vector<int> value_iteration_policy(const TabularMDP& mdp, int iters = 10000,
                                        double tol = 1e-12);
std::vector<double> policy_state_values(const TabularMDP& mdp,
                                        const std::vector<std::vector<double>>& policy);

}  // namespace idrl
