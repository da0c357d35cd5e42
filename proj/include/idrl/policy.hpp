#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "idrl/dataset.hpp"
#include "idrl/gridworld.hpp"
#include "idrl/heads.hpp"

namespace idrl {

// Unimodal Gaussian policy: network mean, state-independent learnable log-std.
class GaussianPolicy {
 public:
  GaussianPolicy(int obs_dim, int act_dim, std::vector<int> hidden, std::uint64_t seed,
                 double log_std_min = -5.0, double log_std_max = 2.0);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  std::vector<double> mean(const std::vector<double>& s) const;
  std::vector<double> sample(const std::vector<double>& s, std::mt19937_64& rng) const;
  double log_prob(const std::vector<double>& s, const std::vector<double>& a) const;

  FunctionHead& mean_head() { return *mean_; }
  const FunctionHead& mean_head() const { return *mean_; }
  std::vector<double>& log_std() { return log_std_; }
  const std::vector<double>& log_std() const { return log_std_; }
  void clip_log_std();
  double log_std_min() const { return log_std_min_; }
  double log_std_max() const { return log_std_max_; }

  void save(const std::string& path) const;
  static GaussianPolicy load(const std::string& path);

 private:
  int obs_dim_, act_dim_;
  std::unique_ptr<FunctionHead> mean_;
  std::vector<double> log_std_;
  double log_std_min_, log_std_max_;
};

struct BcConfig {
  int steps = 10000;
  int batch_size = 256;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {64, 64};
};

// Negative mean of w_i * log pi(a_i|s_i) over the batch.
double weighted_bc_loss(const GaussianPolicy& pi, const TransitionDataset& ds,
                        const std::vector<double>& weights,
                        const std::vector<std::size_t>& batch);

// Analytic gradients of weighted_bc_loss w.r.t. the mean network and log-std.
void weighted_bc_grads(const GaussianPolicy& pi, const TransitionDataset& ds,
                       const std::vector<double>& weights,
                       const std::vector<std::size_t>& batch,
                       std::vector<double>& grad_mean, std::vector<double>& grad_log_std);

GaussianPolicy weighted_bc(const TransitionDataset& ds, const std::vector<double>& weights,
                           const BcConfig& cfg);

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_discounted = 0.0;
  std::vector<double> returns;  // undiscounted, per episode
  std::vector<int> steps;       // episode lengths
};

EvalResult evaluate_policy(GridworldEnv& env, const GaussianPolicy& pi, int episodes,
                           std::uint64_t seed, bool deterministic = true);

}  // namespace idrl
