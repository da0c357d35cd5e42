#include "idrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace idrl {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;
}

GaussianPolicy::GaussianPolicy(int obs_dim, int act_dim, std::vector<int> hidden,
                               std::uint64_t seed, double log_std_min, double log_std_max)
    : obs_dim_(obs_dim),
      act_dim_(act_dim),
      mean_(std::make_unique<MlpHead>(obs_dim, std::move(hidden), act_dim, seed)),
      log_std_(act_dim, 0.0),
      log_std_min_(log_std_min),
      log_std_max_(log_std_max) {}

std::vector<double> GaussianPolicy::mean(const std::vector<double>& s) const {
  std::vector<double> m(act_dim_);
  mean_->forward(s, m);
  return m;
}

std::vector<double> GaussianPolicy::sample(const std::vector<double>& s,
                                           std::mt19937_64& rng) const {
  std::vector<double> a = mean(s);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int d = 0; d < act_dim_; ++d) a[d] += std::exp(log_std_[d]) * gauss(rng);
  return a;
}

double GaussianPolicy::log_prob(const std::vector<double>& s,
                                const std::vector<double>& a) const {
  const std::vector<double> m = mean(s);
  double lp = 0.0;
  for (int d = 0; d < act_dim_; ++d) {
    const double sd = std::exp(log_std_[d]);
    const double z = (a[d] - m[d]) / sd;
    lp += -0.5 * z * z - log_std_[d] - 0.5 * kLogTwoPi;
  }
  return lp;
}

void GaussianPolicy::clip_log_std() {
  for (double& l : log_std_) l = std::clamp(l, log_std_min_, log_std_max_);
}

void GaussianPolicy::save(const std::string& path) const {
  nlohmann::json jm;
  mean_->to_json(jm);
  nlohmann::json j = {{"obs_dim", obs_dim_},          {"act_dim", act_dim_},
                      {"mean", jm},                   {"log_std", log_std_},
                      {"log_std_min", log_std_min_},  {"log_std_max", log_std_max_}};
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump() << "\n";
}

GaussianPolicy GaussianPolicy::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  f >> j;
  GaussianPolicy pi(j.at("obs_dim").get<int>(), j.at("act_dim").get<int>(), {1}, 0,
                    j.at("log_std_min").get<double>(), j.at("log_std_max").get<double>());
  pi.mean_ = head_from_json(j.at("mean"));
  pi.log_std_ = j.at("log_std").get<std::vector<double>>();
  return pi;
}

double weighted_bc_loss(const GaussianPolicy& pi, const TransitionDataset& ds,
                        const std::vector<double>& weights,
                        const std::vector<std::size_t>& batch) {
  double loss = 0.0;
  for (std::size_t i : batch) loss -= weights[i] * pi.log_prob(ds[i].s, ds[i].a);
  loss /= static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw std::runtime_error("weighted_bc_loss: non-finite loss");
  return loss;
}

void weighted_bc_grads(const GaussianPolicy& pi, const TransitionDataset& ds,
                       const std::vector<double>& weights,
                       const std::vector<std::size_t>& batch,
                       std::vector<double>& grad_mean, std::vector<double>& grad_log_std) {
  grad_mean.assign(pi.mean_head().params().size(), 0.0);
  grad_log_std.assign(pi.log_std().size(), 0.0);
  std::vector<double> dmean(ds.act_dim());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double w = weights[i];
    if (w == 0.0) continue;
    const std::vector<double> m = pi.mean(t.s);
    for (int d = 0; d < ds.act_dim(); ++d) {
      const double sd = std::exp(pi.log_std()[d]);
      const double z = (t.a[d] - m[d]) / sd;
      dmean[d] = -w * z / sd * inv_b;                 // d(-w log pi)/d mean
      grad_log_std[d] += -w * (z * z - 1.0) * inv_b;  // d(-w log pi)/d log_std
    }
    pi.mean_head().accumulate_grad(t.s, dmean, grad_mean);
  }
}

GaussianPolicy weighted_bc(const TransitionDataset& ds, const std::vector<double>& weights,
                           const BcConfig& cfg) {
  if (weights.size() != ds.size())
    throw std::invalid_argument("weighted_bc: weight/dataset misalignment");
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("weighted_bc: negative weight");
    wsum += w;
  }
  if (wsum <= 0.0) throw std::invalid_argument("weighted_bc: all weights zero");

  GaussianPolicy pi(ds.obs_dim(), ds.act_dim(), cfg.hidden, cfg.seed * 4 + 5);
  AdamOptimizer opt_mean(pi.mean_head().params().size(), cfg.lr);
  AdamOptimizer opt_std(pi.log_std().size(), cfg.lr);

  std::mt19937_64 rng(cfg.seed + 0x2545f4914f6cdd1dull);
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, ds.size());
  std::vector<double> gmean(pi.mean_head().params().size());
  std::vector<double> gstd(pi.log_std().size());
  std::vector<std::size_t> batch(bsz);
  const bool full_batch = bsz == ds.size();
  if (full_batch) std::iota(batch.begin(), batch.end(), 0);

  for (int step = 0; step < cfg.steps; ++step) {
    if (!full_batch)
      for (auto& i : batch) i = pick(rng);
    weighted_bc_grads(pi, ds, weights, batch, gmean, gstd);
    opt_mean.step(pi.mean_head().params(), gmean);
    opt_std.step(pi.log_std(), gstd);
    pi.clip_log_std();
  }
  return pi;
}

EvalResult evaluate_policy(GridworldEnv& env, const GaussianPolicy& pi, int episodes,
                           std::uint64_t seed, bool deterministic) {
  if (episodes <= 0) throw std::invalid_argument("evaluate_policy: episodes must be > 0");
  std::mt19937_64 rng(seed);
  EvalResult res;
  double disc_sum = 0.0;
  const double gamma = env.spec().gamma;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reseed(seed + 1000003ull * static_cast<std::uint64_t>(ep + 1));
    std::vector<double> s = env.reset();
    double ret = 0.0, dret = 0.0, g = 1.0;
    int len = 0;
    for (int t = 0; t < env.spec().max_episode_len; ++t) {
      const std::vector<double> a = deterministic ? pi.mean(s) : pi.sample(s, rng);
      auto out = env.step(a);
      ret += out.reward;
      dret += g * out.reward;
      g *= gamma;
      ++len;
      if (out.done) break;
      s = out.s_next;
    }
    res.returns.push_back(ret);
    res.steps.push_back(len);
    disc_sum += dret;
  }
  const double n = static_cast<double>(episodes);
  res.mean_return = std::accumulate(res.returns.begin(), res.returns.end(), 0.0) / n;
  double var = 0.0;
  for (double r : res.returns) var += (r - res.mean_return) * (r - res.mean_return);
  res.std_return = std::sqrt(var / n);
  res.mean_discounted = disc_sum / n;
  return res;
}

}  // namespace idrl
