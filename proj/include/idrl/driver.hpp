#pragma once

#include <optional>
#include <string>
#include <vector>

#include "idrl/correction.hpp"
#include "idrl/dataset.hpp"
#include "idrl/dual.hpp"
#include "idrl/policy.hpp"

namespace idrl {

enum class RatioMode { Corrected, ActionOnly };

struct IdrlConfig {
  int iterations = 2;  // M
  TrainConfig dual;
  TrainConfig correction;
  DivergenceSpec spec;
  BackendSpec backend;
  RatioMode ratio_mode = RatioMode::Corrected;
  double filter_threshold = 0.0;
  BcConfig bc;
  std::uint64_t seed = 0;
};

struct IterationReport {
  int iteration = 0;
  std::size_t retained = 0;
  double mean_reward = 0.0;
  double mean_fragment_len = 0.0;
  double eval_return = std::numeric_limits<double>::quiet_NaN();
  double wall_clock_s = 0.0;
};

struct RatioEstimate {
  std::vector<double> action;    // w(a|s)
  std::vector<double> state;     // w(s), empty in ActionOnly mode
  std::vector<double> combined;  // w(s,a) (== action in ActionOnly mode)
};

std::vector<std::size_t> filter_indices(const std::vector<double>& weights,
                                        double threshold);
TransitionDataset filter_dataset(const TransitionDataset& ds,
                                 const std::vector<double>& weights, double threshold);

struct IdrlResult {
  GaussianPolicy policy;
  std::vector<IterationReport> reports;
  TransitionDataset final_dataset;   // D_M
  std::vector<double> final_weights; // w_M aligned with D_M
  RatioEstimate final_ratios;
};

// Algorithm loop: per iteration train the dual engine, extract action ratios,
// optionally run the visitation correction, filter to the positive-weight
// support; after the last iteration run weighted BC with the final weights.
IdrlResult run_idrl(const TransitionDataset& ds, const IdrlConfig& cfg,
                    GridworldEnv* eval_env = nullptr, int eval_episodes = 20);

struct DwbcResult {
  GaussianPolicy policy;
  std::vector<double> weights;  // per offline transition, post-threshold
  bool saturated = false;
};

// Oracle baseline: discriminator between expert and offline (s,a) pairs,
// weighted BC with d/(1-d) thresholded at delta.
DwbcResult optimal_dwbc(const TransitionDataset& offline, const TransitionDataset& expert,
                        double delta, const BcConfig& cfg, int disc_steps = 5000);

// Plain BC on the top x% of trajectories ranked by undiscounted return.
GaussianPolicy top_x_bc(const TransitionDataset& ds, double x_percent, const BcConfig& cfg);

void write_reports_csv(const std::vector<IterationReport>& reports,
                       const std::string& path);
void write_timings_csv(const std::vector<IterationReport>& reports,
                       const std::string& path);
void write_ratio_dump_csv(const RatioEstimate& ratios, const std::string& path);

}  // namespace idrl
