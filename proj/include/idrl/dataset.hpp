#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace idrl {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
  std::uint32_t traj_id = 0;
  std::uint32_t step = 0;
};

// Immutable ordered collection of transitions. Filtering and reward
// transformations always produce a new dataset.
class TransitionDataset {
 public:
  TransitionDataset() = default;
  TransitionDataset(int obs_dim, int act_dim, double discount, std::string name,
                    std::vector<Transition> transitions);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  double discount() const { return discount_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return transitions_.size(); }
  const Transition& operator[](std::size_t i) const { return transitions_[i]; }
  const std::vector<Transition>& transitions() const { return transitions_; }

  // FNV-1a over the serialized numeric content; used by immutability checks.
  std::uint64_t content_hash() const;

  // Trajectory ids in first-appearance order, with the transition indices of each.
  std::vector<std::pair<std::uint32_t, std::vector<std::size_t>>> trajectories() const;

  // Undiscounted return of each trajectory, keyed as in trajectories().
  std::vector<std::pair<std::uint32_t, double>> trajectory_returns() const;

  TransitionDataset with_transitions(std::vector<Transition> t, std::string name) const;

 private:
  int obs_dim_ = 0;
  int act_dim_ = 0;
  double discount_ = 0.99;
  std::string name_;
  std::vector<Transition> transitions_;
};

enum class RewardNorm { None, RangeStandardize, Shift };

TransitionDataset normalize_rewards(const TransitionDataset& ds, RewardNorm mode,
                                    double shift = 0.0);

// Trajectory-granular mix: floor(expert_ratio*total) expert transitions, the
// remainder random; trajectories stay whole except a final partial fragment.
TransitionDataset mix_datasets(const TransitionDataset& expert,
                               const TransitionDataset& random, double expert_ratio,
                               std::size_t total, std::uint64_t seed);

void save_dataset(const TransitionDataset& ds, const std::string& path);
TransitionDataset load_dataset(const std::string& path);

}  // namespace idrl
