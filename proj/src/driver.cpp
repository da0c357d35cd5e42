#include "idrl/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

namespace idrl {

std::vector<std::size_t> filter_indices(const std::vector<double>& weights,
                                        double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("filter: threshold must be >= 0");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i] > threshold) kept.push_back(i);
  return kept;
}

TransitionDataset filter_dataset(const TransitionDataset& ds,
                                 const std::vector<double>& weights, double threshold) {
  if (weights.size() != ds.size())
    throw std::invalid_argument("filter: weight/dataset misalignment");
  const std::vector<std::size_t> kept = filter_indices(weights, threshold);
  if (kept.empty())
    throw std::runtime_error(
        "filter: no transition survived; lower the threshold or run fewer iterations");
  std::vector<Transition> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(ds[i]);
  return ds.with_transitions(std::move(out), ds.name() + ":filtered");
}

namespace {

double mean_reward(const TransitionDataset& ds) {
  double s = 0.0;
  for (const Transition& t : ds.transitions()) s += t.r;
  return s / static_cast<double>(ds.size());
}

// Mean length of maximal consecutive-step runs within each trajectory.
double mean_fragment_length(const TransitionDataset& ds) {
  std::size_t fragments = 0;
  for (const auto& [id, idx] : ds.trajectories()) {
    std::uint32_t prev = 0;
    bool first = true;
    for (std::size_t i : idx) {
      const std::uint32_t step = ds[i].step;
      if (first || step != prev + 1) ++fragments;
      prev = step;
      first = false;
    }
  }
  return fragments == 0 ? 0.0
                        : static_cast<double>(ds.size()) / static_cast<double>(fragments);
}

}  // namespace

IdrlResult run_idrl(const TransitionDataset& ds, const IdrlConfig& cfg,
                    GridworldEnv* eval_env, int eval_episodes) {
  if (cfg.iterations < 1) throw std::invalid_argument("run_idrl: M must be >= 1");
  TransitionDataset current = ds;
  std::vector<IterationReport> reports;
  std::optional<RatioEstimate> last_ratios;

  for (int k = 1; k <= cfg.iterations; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig dual_cfg = cfg.dual;
    dual_cfg.seed = cfg.seed + 100ull * static_cast<std::uint64_t>(k);
    DualTrainState dual = train_dual(current, cfg.backend, cfg.spec, dual_cfg);

    RatioEstimate ratios;
    ratios.action = action_ratios(dual, current);
    if (cfg.ratio_mode == RatioMode::Corrected) {
      TrainConfig corr_cfg = cfg.correction;
      corr_cfg.seed = dual_cfg.seed;
      CorrectionState corr = train_correction(current, dual, cfg.backend, corr_cfg);
      ratios.state = state_ratios(corr, current);
      ratios.combined = combined_ratios(corr, dual, current);
    } else {
      ratios.combined = ratios.action;
    }

    IterationReport rep;
    rep.iteration = k;
    rep.retained = current.size();
    rep.mean_reward = mean_reward(current);
    rep.mean_fragment_len = mean_fragment_length(current);

    if (k < cfg.iterations) {
      try {
        current = filter_dataset(current, ratios.combined, cfg.filter_threshold);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("iteration " + std::to_string(k) + ": " + e.what());
      }
    } else {
      last_ratios = std::move(ratios);
    }
    rep.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    reports.push_back(rep);
  }

  BcConfig bc_cfg = cfg.bc;
  bc_cfg.seed = cfg.seed;
  GaussianPolicy policy = weighted_bc(current, last_ratios->combined, bc_cfg);

  if (eval_env != nullptr) {
    const EvalResult ev =
        evaluate_policy(*eval_env, policy, eval_episodes, cfg.seed + 77, true);
    reports.back().eval_return = ev.mean_return;
  }

  return IdrlResult{std::move(policy), std::move(reports), std::move(current),
                    last_ratios->combined, std::move(*last_ratios)};
}

DwbcResult optimal_dwbc(const TransitionDataset& offline, const TransitionDataset& expert,
                        double delta, const BcConfig& cfg, int disc_steps) {
  if (offline.size() == 0 || expert.size() == 0)
    throw std::invalid_argument("optimal_dwbc: empty dataset");
  const int in_dim = offline.obs_dim() + offline.act_dim();
  MlpHead disc(in_dim, cfg.hidden, 1, cfg.seed * 4 + 6);
  AdamOptimizer opt(disc.params().size(), 1e-3);

  std::mt19937_64 rng(cfg.seed + 0x6a09e667f3bcc909ull);
  std::uniform_int_distribution<std::size_t> pick_off(0, offline.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_exp(0, expert.size() - 1);
  const std::size_t half = std::max<std::size_t>(1, cfg.batch_size / 2);

  auto concat = [](const Transition& t) {
    std::vector<double> x(t.s);
    x.insert(x.end(), t.a.begin(), t.a.end());
    return x;
  };

  std::vector<double> grad(disc.params().size());
  for (int step = 0; step < disc_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(2 * half);
    for (std::size_t b = 0; b < half; ++b) {
      // expert = positive, offline = negative; BCE on the logit
      const std::vector<double> xe = concat(expert[pick_exp(rng)]);
      const double pe = 1.0 / (1.0 + std::exp(-disc.value(xe)));
      disc.accumulate_grad1(xe, (pe - 1.0) * inv_b, grad);
      const std::vector<double> xo = concat(offline[pick_off(rng)]);
      const double po = 1.0 / (1.0 + std::exp(-disc.value(xo)));
      disc.accumulate_grad1(xo, po * inv_b, grad);
    }
    opt.step(disc.params(), grad);
  }

  DwbcResult res{GaussianPolicy(offline.obs_dim(), offline.act_dim(), cfg.hidden, 0),
                 {}, false};
  res.weights.resize(offline.size());
  bool any_mid = false;
  for (std::size_t i = 0; i < offline.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-disc.value(concat(offline[i]))));
    if (p > 1e-6 && p < 1.0 - 1e-6) any_mid = true;
    const double w = p / (1.0 - p);  // d/(1-d)
    res.weights[i] = w > delta ? w : 0.0;
  }
  res.saturated = !any_mid;
  res.policy = weighted_bc(offline, res.weights, cfg);
  return res;
}

GaussianPolicy top_x_bc(const TransitionDataset& ds, double x_percent, const BcConfig& cfg) {
  if (!(x_percent > 0.0 && x_percent <= 100.0))
    throw std::invalid_argument("top_x_bc: x must be in (0,100]");
  auto returns = ds.trajectory_returns();
  if (returns.empty()) throw std::invalid_argument("top_x_bc: no trajectories");
  std::stable_sort(returns.begin(), returns.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(x_percent / 100.0 * static_cast<double>(returns.size())));
  std::map<std::uint32_t, bool> keep_id;
  for (std::size_t i = 0; i < keep; ++i) keep_id[returns[i].first] = true;
  std::vector<double> weights(ds.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (keep_id.count(ds[i].traj_id)) weights[i] = 1.0;
  return weighted_bc(ds, weights, cfg);
}

void write_reports_csv(const std::vector<IterationReport>& reports,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.precision(17);
  f << "iteration,retained,mean_reward,mean_fragment_len,eval_return\n";
  for (const IterationReport& r : reports)
    f << r.iteration << "," << r.retained << "," << r.mean_reward << ","
      << r.mean_fragment_len << "," << r.eval_return << "\n";
}

void write_timings_csv(const std::vector<IterationReport>& reports,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "iteration,wall_clock_s\n";
  for (const IterationReport& r : reports)
    f << r.iteration << "," << r.wall_clock_s << "\n";
}

void write_ratio_dump_csv(const RatioEstimate& ratios, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.precision(17);
  f << "index,w_action,w_state,w_combined\n";
  for (std::size_t i = 0; i < ratios.combined.size(); ++i) {
    const double ws = ratios.state.empty() ? 1.0 : ratios.state[i];
    f << i << "," << ratios.action[i] << "," << ws << "," << ratios.combined[i] << "\n";
  }
}

}  // namespace idrl
