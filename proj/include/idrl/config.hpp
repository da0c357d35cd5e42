#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idrl/driver.hpp"
#include "idrl/gridworld.hpp"

namespace idrl {

// One flat record describing an experiment run. Serializes to a single JSON
// object (same line format as dataset records) so configs round-trip exactly.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int seeds = 3;  // fan-out count for multi-seed runs

  std::string backend = "network";  // "tabular" | "network"
  std::vector<int> hidden = {64, 64};

  // environment
  int grid_width = 5;
  int grid_height = 5;
  int start_cell = 0;
  int goal_cell = 24;
  double noise_scale = 0.1;
  int max_episode_len = 50;
  double gamma = 0.99;

  // algorithm
  int iterations = 2;  // M
  int n1 = 20000;      // dual steps per iteration
  int n2 = 20000;      // correction steps per iteration
  std::string mode = "lambda";  // "lambda" | "alpha"
  double lambda = 0.6;
  double alpha = 1.0;
  int batch_size = 256;
  double lr = 1e-4;
  double tau = 5e-3;
  double filter_threshold = 0.0;
  std::string ratio_mode = "corrected";  // "corrected" | "action"
  bool orthogonal_grad = false;
  double eta = 1.0;
  double reward_shift = 0.0;  // subtracted from rewards before value learning

  // behavior cloning / baselines
  int bc_steps = 10000;
  double bc_lr = 1e-3;
  std::string baseline = "idrl";  // "idrl" | "bc" | "top10" | "dwbc"
  double dwbc_delta = 1.0;
  std::string expert_dataset;  // dwbc only

  // evaluation / plumbing
  int eval_episodes = 100;
  std::string dataset;
  std::string out_dir = "out";

  void validate() const;

  GridworldSpec grid_spec() const;
  DivergenceSpec divergence() const;
  BackendSpec backend_spec() const;
  IdrlConfig idrl_config() const;
  BcConfig bc_config() const;

  // N1=N2=500k, 3x256 networks, 7 seeds.
  static ExperimentConfig full_scale();
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace idrl
