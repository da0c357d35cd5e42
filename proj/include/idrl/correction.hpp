#pragma once

#include <memory>
#include <vector>

#include "idrl/dataset.hpp"
#include "idrl/dual.hpp"

namespace idrl {

// Recovers the state visitation ratio w(s) from a frozen action ratio via the
// dual off-policy-evaluation problem with the reward-free Bellman operator
// T U(s,a) = gamma * (1 - done) * U(s').
struct CorrectionState {
  std::unique_ptr<FunctionHead> u;  // state-only dual value
  std::unique_ptr<FunctionHead> w;  // state-only ratio estimate
  std::unique_ptr<AdamOptimizer> opt_u, opt_w;
  std::vector<double> action_ratio;  // frozen, aligned with the dataset
  DivergenceSpec spec;
  long step = 0;
  std::vector<CurvePoint> curve;
};

CorrectionState make_correction_state(const TransitionDataset& ds,
                                      const std::vector<double>& action_ratio,
                                      const BackendSpec& backend,
                                      const DivergenceSpec& spec, const TrainConfig& cfg);

// Mean of f(W(s)) - w(a|s)*(TU(s,a) - U(s))*W(s), U detached.
double w_loss(const CorrectionState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch);

// Mean of [U(s) - TU(s,a)] + max(0,W(s))*w(a|s)*(TU(s,a) - U(s)), W detached.
double u_loss(const CorrectionState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch);

std::vector<double> w_loss_grad(const CorrectionState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch);
std::vector<double> u_loss_grad(const CorrectionState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch);

// Alternates one w step and one u step per tick; action ratios stay frozen.
CorrectionState train_correction(const TransitionDataset& ds,
                                 const std::vector<double>& action_ratio,
                                 const BackendSpec& backend, const DivergenceSpec& spec,
                                 const TrainConfig& cfg);

// Convenience overload plugging the dual engine's rescaled policy ratio.
CorrectionState train_correction(const TransitionDataset& ds,
                                 const DualTrainState& dual, const BackendSpec& backend,
                                 const TrainConfig& cfg);

double state_ratio(const CorrectionState& st, const std::vector<double>& s);

// Eq-12 product form: max(0,W(s)) * max(0,(f')^{-1}((Q-V)/scale)).
double combined_ratio(const CorrectionState& st, const DualTrainState& dual,
                      const std::vector<double>& s, const std::vector<double>& a);

std::vector<double> state_ratios(const CorrectionState& st, const TransitionDataset& ds);
std::vector<double> combined_ratios(const CorrectionState& st, const DualTrainState& dual,
                                    const TransitionDataset& ds);

}  // namespace idrl
