#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "idrl/dataset.hpp"
#include "idrl/divergence.hpp"
#include "idrl/heads.hpp"

namespace idrl {

// Chooses the function-approximation family for all value heads of a run.
struct BackendSpec {
  enum class Kind { TabularIndex, TabularGrid, Network };
  Kind kind = Kind::Network;
  int n_states = 0, n_actions = 0;   // TabularIndex
  int width = 0, height = 0;         // TabularGrid
  std::vector<int> hidden = {64, 64};

  std::unique_ptr<FunctionHead> make_state_head(int obs_dim, std::uint64_t seed) const;
  std::unique_ptr<FunctionHead> make_state_action_head(int obs_dim, int act_dim,
                                                       std::uint64_t seed) const;

  static BackendSpec tabular_index(int n_states, int n_actions);
  static BackendSpec tabular_grid(int width, int height);
  static BackendSpec network(std::vector<int> hidden = {64, 64});
};

struct TrainConfig {
  int steps = 20000;
  int batch_size = 256;
  double lr = 1e-4;
  double tau = 5e-3;
  std::uint64_t seed = 0;
  double divergence_bound = 1e6;
  int log_every = 1000;
  bool orthogonal_grad = false;  // O-DICE style projected backward gradient
  double eta = 1.0;              // strength of the projected backward gradient
};

struct CurvePoint {
  long step;
  double loss_a;  // v_loss / w_loss
  double loss_b;  // q_loss / u_loss
  double mean_ratio;
};

struct DualTrainState {
  std::unique_ptr<FunctionHead> v;
  std::unique_ptr<FunctionHead> q;
  TargetCopy q_target;
  std::unique_ptr<AdamOptimizer> opt_v, opt_q;
  DivergenceSpec spec;
  long step = 0;
  std::vector<CurvePoint> curve;
};

DualTrainState make_dual_state(const TransitionDataset& ds, const BackendSpec& backend,
                               const DivergenceSpec& spec, const TrainConfig& cfg);

// Mean over the batch of blend(V(s), f_p*((Qbar(s,a) - V(s))/scale)) with Qbar
// the target Q head. Pure in the head parameters.
double v_loss(const DualTrainState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch);

// Mean squared error of Q(s,a) against r + gamma*(1-done)*V(s'), V detached.
double q_loss(const DualTrainState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch);

// Gradient of v_loss / q_loss with respect to the live head's parameters.
std::vector<double> v_loss_grad(const DualTrainState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch);
std::vector<double> q_loss_grad(const DualTrainState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch);

// V gradient with the projected backward component of the Bellman residual,
// scaled by eta; zero-norm forward gradients fall back to the semi-gradient.
std::vector<double> orthogonal_grad_mode(const DualTrainState& st,
                                         const TransitionDataset& ds,
                                         const std::vector<std::size_t>& batch,
                                         double eta);

DualTrainState train_dual(const TransitionDataset& ds, const BackendSpec& backend,
                          const DivergenceSpec& spec, const TrainConfig& cfg);

// max(0, (f')^{-1}((Q(s,a) - V(s))/scale)); estimates pi*(a|s)/mu(a|s).
double action_ratio(const DualTrainState& st, const std::vector<double>& s,
                    const std::vector<double>& a);

// Action ratio rescaled so its stationary per-state conditional mean is 1
// (lambda-form ratios satisfy E_mu[w] = (1-lambda)/lambda at the fixed point).
double policy_ratio(const DualTrainState& st, const std::vector<double>& s,
                    const std::vector<double>& a);

std::vector<double> action_ratios(const DualTrainState& st, const TransitionDataset& ds);
std::vector<double> policy_ratios(const DualTrainState& st, const TransitionDataset& ds);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path,
                     const std::string& loss_a_name, const std::string& loss_b_name);

}  // namespace idrl
