#include "idrl/heads.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace idrl {

// ---------------------------------------------------------------- TabularCoder

int TabularCoder::table_size() const {
  switch (kind) {
    case Kind::Index: return n_first;
    case Kind::IndexPair: return n_first * n_second;
    case Kind::GridState: return n_first * grid_height;
    case Kind::GridStateAction: return n_first * grid_height * 4;
  }
  throw std::logic_error("bad coder kind");
}

int TabularCoder::expected_in_dim() const {
  switch (kind) {
    case Kind::Index: return 1;
    case Kind::IndexPair: return 2;
    case Kind::GridState: return 2;
    case Kind::GridStateAction: return 4;
  }
  throw std::logic_error("bad coder kind");
}

namespace {
int grid_cell(std::span<const double> xy, int width, int height) {
  const int x = std::clamp(static_cast<int>(std::floor(xy[0])), 0, width - 1);
  const int y = std::clamp(static_cast<int>(std::floor(xy[1])), 0, height - 1);
  return y * width + x;
}
int dominant_direction(double ax, double ay) {
  if (std::abs(ax) >= std::abs(ay)) return ax >= 0.0 ? 0 : 1;
  return ay >= 0.0 ? 2 : 3;
}
}  // namespace

int TabularCoder::code(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != expected_in_dim())
    throw std::invalid_argument("TabularCoder: input dimension mismatch");
  switch (kind) {
    case Kind::Index: {
      const int i = static_cast<int>(std::llround(x[0]));
      if (i < 0 || i >= n_first) throw std::out_of_range("TabularCoder: state index");
      return i;
    }
    case Kind::IndexPair: {
      const int s = static_cast<int>(std::llround(x[0]));
      const int a = static_cast<int>(std::llround(x[1]));
      if (s < 0 || s >= n_first || a < 0 || a >= n_second)
        throw std::out_of_range("TabularCoder: index pair");
      return s * n_second + a;
    }
    case Kind::GridState:
      return grid_cell(x, n_first, grid_height);
    case Kind::GridStateAction:
      return grid_cell(x.subspan(0, 2), n_first, grid_height) * 4 +
             dominant_direction(x[2], x[3]);
  }
  throw std::logic_error("bad coder kind");
}

TabularCoder TabularCoder::state_index(int n_states) {
  return {Kind::Index, n_states, 0, 0};
}
TabularCoder TabularCoder::state_action_index(int n_states, int n_actions) {
  return {Kind::IndexPair, n_states, n_actions, 0};
}
TabularCoder TabularCoder::grid_state(int width, int height) {
  return {Kind::GridState, width, 0, height};
}
TabularCoder TabularCoder::grid_state_action(int width, int height) {
  return {Kind::GridStateAction, width, 0, height};
}

// ---------------------------------------------------------------- FunctionHead

double FunctionHead::value(std::span<const double> x) const {
  if (out_dim() != 1) throw std::logic_error("value() requires a scalar head");
  double y;
  forward(x, {&y, 1});
  return y;
}

void FunctionHead::accumulate_grad1(std::span<const double> x, double dy,
                                    std::span<double> gparams) const {
  accumulate_grad(x, {&dy, 1}, gparams);
}

// ----------------------------------------------------------------- TabularHead

TabularHead::TabularHead(TabularCoder coder, double init) : coder_(coder) {
  params_.assign(coder_.table_size(), init);
}

void TabularHead::forward(std::span<const double> x, std::span<double> y) const {
  y[0] = params_[coder_.code(x)];
}

void TabularHead::accumulate_grad(std::span<const double> x, std::span<const double> dy,
                                  std::span<double> gparams) const {
  gparams[coder_.code(x)] += dy[0];
}

std::unique_ptr<FunctionHead> TabularHead::clone() const {
  auto h = std::make_unique<TabularHead>(coder_);
  h->params_ = params_;
  return h;
}

void TabularHead::to_json(nlohmann::json& j) const {
  j = {{"backend", "tabular"},
       {"coder_kind", static_cast<int>(coder_.kind)},
       {"n_first", coder_.n_first},
       {"n_second", coder_.n_second},
       {"grid_height", coder_.grid_height},
       {"params", params_}};
}

// --------------------------------------------------------------------- MlpHead

MlpHead::MlpHead(int in_dim, std::vector<int> hidden, int out_dim, std::uint64_t seed)
    : in_dim_(in_dim), out_dim_(out_dim), hidden_(std::move(hidden)) {
  if (in_dim_ <= 0 || out_dim_ <= 0) throw std::invalid_argument("MlpHead: bad dims");
  int prev = in_dim_;
  std::size_t total = 0;
  for (std::size_t l = 0; l <= hidden_.size(); ++l) {
    const int width = l < hidden_.size() ? hidden_[l] : out_dim_;
    layer_in_.push_back(prev);
    layer_out_.push_back(width);
    w_off_.push_back(static_cast<int>(total));
    total += static_cast<std::size_t>(width) * prev;
    b_off_.push_back(static_cast<int>(total));
    total += width;
    prev = width;
  }
  params_.assign(total, 0.0);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < layer_in_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_in_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < layer_out_[l] * layer_in_[l]; ++i) params_[w_off_[l] + i] = u(rng);
    for (int i = 0; i < layer_out_[l]; ++i) params_[b_off_[l] + i] = u(rng);
  }
}

void MlpHead::forward_tape(std::span<const double> x,
                           std::vector<std::vector<double>>& acts) const {
  if (static_cast<int>(x.size()) != in_dim_)
    throw std::invalid_argument("MlpHead: input dimension mismatch");
  acts.clear();
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layer_in_.size(); ++l) {
    const std::vector<double>& in = acts.back();
    std::vector<double> out(layer_out_[l]);
    const bool last = l + 1 == layer_in_.size();
    for (int i = 0; i < layer_out_[l]; ++i) {
      double z = params_[b_off_[l] + i];
      const double* w = &params_[w_off_[l] + static_cast<std::size_t>(i) * layer_in_[l]];
      for (int k = 0; k < layer_in_[l]; ++k) z += w[k] * in[k];
      out[i] = last ? z : std::max(0.0, z);
    }
    acts.push_back(std::move(out));
  }
}

void MlpHead::forward(std::span<const double> x, std::span<double> y) const {
  std::vector<std::vector<double>> acts;
  forward_tape(x, acts);
  const std::vector<double>& out = acts.back();
  std::copy(out.begin(), out.end(), y.begin());
}

void MlpHead::accumulate_grad(std::span<const double> x, std::span<const double> dy,
                              std::span<double> gparams) const {
  std::vector<std::vector<double>> acts;
  forward_tape(x, acts);
  std::vector<double> delta(dy.begin(), dy.end());
  for (int l = static_cast<int>(layer_in_.size()) - 1; l >= 0; --l) {
    const std::vector<double>& in = acts[l];
    const std::vector<double>& out = acts[l + 1];
    const bool last = l + 1 == static_cast<int>(layer_in_.size());
    if (!last)  // ReLU: kill gradient where the unit was inactive
      for (int i = 0; i < layer_out_[l]; ++i)
        if (out[i] <= 0.0) delta[i] = 0.0;
    std::vector<double> prev_delta(layer_in_[l], 0.0);
    for (int i = 0; i < layer_out_[l]; ++i) {
      const double d = delta[i];
      gparams[b_off_[l] + i] += d;
      const std::size_t row = w_off_[l] + static_cast<std::size_t>(i) * layer_in_[l];
      const double* w = &params_[row];
      double* g = &gparams[row];
      for (int k = 0; k < layer_in_[l]; ++k) {
        g[k] += d * in[k];
        prev_delta[k] += d * w[k];
      }
    }
    delta = std::move(prev_delta);
  }
}

std::unique_ptr<FunctionHead> MlpHead::clone() const {
  auto h = std::make_unique<MlpHead>(in_dim_, hidden_, out_dim_, 0);
  h->params_ = params_;
  return h;
}

void MlpHead::to_json(nlohmann::json& j) const {
  j = {{"backend", "network"}, {"in_dim", in_dim_},   {"hidden", hidden_},
       {"out_dim", out_dim_},  {"params", params_}};
}

// ------------------------------------------------------------------ checkpoint

std::unique_ptr<FunctionHead> head_from_json(const nlohmann::json& j) {
  const std::string backend = j.at("backend").get<std::string>();
  std::unique_ptr<FunctionHead> head;
  if (backend == "tabular") {
    TabularCoder coder{static_cast<TabularCoder::Kind>(j.at("coder_kind").get<int>()),
                       j.at("n_first").get<int>(), j.at("n_second").get<int>(),
                       j.at("grid_height").get<int>()};
    head = std::make_unique<TabularHead>(coder);
  } else if (backend == "network") {
    head = std::make_unique<MlpHead>(j.at("in_dim").get<int>(),
                                     j.at("hidden").get<std::vector<int>>(),
                                     j.at("out_dim").get<int>(), 0);
  } else {
    throw std::runtime_error("unknown head backend: " + backend);
  }
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != head->params().size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  head->params() = std::move(params);
  return head;
}

void save_head(const FunctionHead& head, const std::string& path) {
  nlohmann::json j;
  head.to_json(j);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump() << "\n";
}

std::unique_ptr<FunctionHead> load_head(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  f >> j;
  return head_from_json(j);
}

// ------------------------------------------------------------------------ Adam

AdamOptimizer::AdamOptimizer(std::size_t n_params, double lr, double beta1, double beta2,
                             double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0.0),
      v_(n_params, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("AdamOptimizer: shape mismatch");
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

// ------------------------------------------------------------------ TargetCopy

TargetCopy::TargetCopy(const FunctionHead& source, double tau_)
    : head(source.clone()), tau(tau_) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("TargetCopy: tau in (0,1]");
}

void TargetCopy::soft_update_from(const FunctionHead& source) {
  std::vector<double>& shadow = head->params();
  const std::vector<double>& src = source.params();
  if (shadow.size() != src.size())
    throw std::invalid_argument("soft_update: shape mismatch");
  for (std::size_t i = 0; i < shadow.size(); ++i)
    shadow[i] = (1.0 - tau) * shadow[i] + tau * src[i];
}

}  // namespace idrl
