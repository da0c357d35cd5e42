#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace idrl {

// Maps a raw input vector onto a dense table index.
struct TabularCoder {
  enum class Kind { Index, IndexPair, GridState, GridStateAction };
  Kind kind = Kind::Index;
  int n_first = 0;    // states (Index/IndexPair) or grid width (Grid*)
  int n_second = 0;   // actions (IndexPair/GridStateAction) or grid height (Grid*)
  int grid_height = 0;

  int table_size() const;
  int code(std::span<const double> x) const;
  int expected_in_dim() const;

  static TabularCoder state_index(int n_states);
  static TabularCoder state_action_index(int n_states, int n_actions);
  static TabularCoder grid_state(int width, int height);
  static TabularCoder grid_state_action(int width, int height);
};

// A parametric scalar- or vector-valued function with exact reverse-mode
// gradients with respect to its parameters.
class FunctionHead {
 public:
  virtual ~FunctionHead() = default;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual std::string backend() const = 0;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  virtual void forward(std::span<const double> x, std::span<double> y) const = 0;
  double value(std::span<const double> x) const;

  // Accumulates (dL/dy)^T dy/dparams into gparams; gparams.size() == params().size().
  virtual void accumulate_grad(std::span<const double> x, std::span<const double> dy,
                               std::span<double> gparams) const = 0;
  void accumulate_grad1(std::span<const double> x, double dy,
                        std::span<double> gparams) const;

  virtual std::unique_ptr<FunctionHead> clone() const = 0;
  virtual void to_json(nlohmann::json& j) const = 0;

 protected:
  std::vector<double> params_;
};

class TabularHead final : public FunctionHead {
 public:
  TabularHead(TabularCoder coder, double init = 0.0);
  int in_dim() const override { return coder_.expected_in_dim(); }
  int out_dim() const override { return 1; }
  std::string backend() const override { return "tabular"; }
  void forward(std::span<const double> x, std::span<double> y) const override;
  void accumulate_grad(std::span<const double> x, std::span<const double> dy,
                       std::span<double> gparams) const override;
  std::unique_ptr<FunctionHead> clone() const override;
  void to_json(nlohmann::json& j) const override;
  const TabularCoder& coder() const { return coder_; }

 private:
  TabularCoder coder_;
};

class MlpHead final : public FunctionHead {
 public:
  MlpHead(int in_dim, std::vector<int> hidden, int out_dim, std::uint64_t seed);
  int in_dim() const override { return in_dim_; }
  int out_dim() const override { return out_dim_; }
  std::string backend() const override { return "network"; }
  void forward(std::span<const double> x, std::span<double> y) const override;
  void accumulate_grad(std::span<const double> x, std::span<const double> dy,
                       std::span<double> gparams) const override;
  std::unique_ptr<FunctionHead> clone() const override;
  void to_json(nlohmann::json& j) const override;
  const std::vector<int>& hidden() const { return hidden_; }

 private:
  int in_dim_;
  int out_dim_;
  std::vector<int> hidden_;
  std::vector<int> layer_in_, layer_out_, w_off_, b_off_;
  void forward_tape(std::span<const double> x, std::vector<std::vector<double>>& acts) const;
};

std::unique_ptr<FunctionHead> head_from_json(const nlohmann::json& j);
void save_head(const FunctionHead& head, const std::string& path);
std::unique_ptr<FunctionHead> load_head(const std::string& path);

// Adaptive-moment optimizer with bias correction.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t n_params, double lr = 1e-4, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<double>& params, const std::vector<double>& grad);
  long step_count() const { return step_count_; }
  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long step_count_ = 0;
};

// Shadow copy of a head's parameters, trailing the source by soft updates.
struct TargetCopy {
  std::unique_ptr<FunctionHead> head;
  double tau = 5e-3;

  TargetCopy() = default;
  TargetCopy(const FunctionHead& source, double tau_);
  void soft_update_from(const FunctionHead& source);
};

}  // namespace idrl
