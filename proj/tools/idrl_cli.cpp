#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "idrl/config.hpp"
#include "idrl/oracle.hpp"

namespace fs = std::filesystem;
using namespace idrl;

namespace {

void add_config_overrides(CLI::App* cmd, ExperimentConfig& cfg, std::string& cfg_path) {
  cmd->add_option("--config", cfg_path, "JSON config file; flags below override it");
  cmd->add_option("--seed", cfg.seed, "base RNG seed");
  cmd->add_option("--seeds", cfg.seeds, "number of parallel seeded runs");
  cmd->add_option("--backend", cfg.backend, "tabular | network");
  cmd->add_option("--iterations,-M", cfg.iterations, "filtering iterations M");
  cmd->add_option("--n1", cfg.n1, "dual training steps per iteration");
  cmd->add_option("--n2", cfg.n2, "correction training steps per iteration");
  cmd->add_option("--mode", cfg.mode, "lambda | alpha");
  cmd->add_option("--lambda", cfg.lambda, "lambda-form trade-off weight");
  cmd->add_option("--alpha", cfg.alpha, "alpha-form regularization strength");
  cmd->add_option("--batch-size", cfg.batch_size);
  cmd->add_option("--lr", cfg.lr, "learning rate");
  cmd->add_option("--tau", cfg.tau, "target soft-update rate");
  cmd->add_option("--filter-threshold", cfg.filter_threshold);
  cmd->add_option("--ratio-mode", cfg.ratio_mode, "corrected | action");
  cmd->add_option("--reward-shift", cfg.reward_shift, "constant subtracted from rewards");
  cmd->add_option("--bc-steps", cfg.bc_steps);
  cmd->add_option("--bc-lr", cfg.bc_lr);
  cmd->add_option("--baseline", cfg.baseline, "idrl | bc | top10 | dwbc");
  cmd->add_option("--dwbc-delta", cfg.dwbc_delta);
  cmd->add_option("--expert-dataset", cfg.expert_dataset);
  cmd->add_option("--eval-episodes", cfg.eval_episodes);
  cmd->add_option("--dataset", cfg.dataset);
  cmd->add_option("--out-dir", cfg.out_dir);
  cmd->add_option("--grid-width", cfg.grid_width);
  cmd->add_option("--grid-height", cfg.grid_height);
  cmd->add_option("--goal-cell", cfg.goal_cell);
  cmd->add_option("--noise-scale", cfg.noise_scale);
  cmd->add_option("--max-episode-len", cfg.max_episode_len);
  cmd->add_option("--gamma", cfg.gamma);
  cmd->add_option("--hidden", cfg.hidden, "hidden layer sizes");
}

ExperimentConfig merge_config(const CLI::App* cmd, ExperimentConfig flags,
                              const std::string& cfg_path) {
  if (cfg_path.empty()) {
    flags.validate();
    return flags;
  }
  ExperimentConfig base = load_config(cfg_path);
  // re-apply any flag the user actually passed on top of the file
  ExperimentConfig out = base;
  auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
  if (passed("--seed")) out.seed = flags.seed;
  if (passed("--seeds")) out.seeds = flags.seeds;
  if (passed("--backend")) out.backend = flags.backend;
  if (passed("--iterations")) out.iterations = flags.iterations;
  if (passed("--n1")) out.n1 = flags.n1;
  if (passed("--n2")) out.n2 = flags.n2;
  if (passed("--mode")) out.mode = flags.mode;
  if (passed("--lambda")) out.lambda = flags.lambda;
  if (passed("--alpha")) out.alpha = flags.alpha;
  if (passed("--batch-size")) out.batch_size = flags.batch_size;
  if (passed("--lr")) out.lr = flags.lr;
  if (passed("--tau")) out.tau = flags.tau;
  if (passed("--filter-threshold")) out.filter_threshold = flags.filter_threshold;
  if (passed("--ratio-mode")) out.ratio_mode = flags.ratio_mode;
  if (passed("--reward-shift")) out.reward_shift = flags.reward_shift;
  if (passed("--bc-steps")) out.bc_steps = flags.bc_steps;
  if (passed("--bc-lr")) out.bc_lr = flags.bc_lr;
  if (passed("--baseline")) out.baseline = flags.baseline;
  if (passed("--dwbc-delta")) out.dwbc_delta = flags.dwbc_delta;
  if (passed("--expert-dataset")) out.expert_dataset = flags.expert_dataset;
  if (passed("--eval-episodes")) out.eval_episodes = flags.eval_episodes;
  if (passed("--dataset")) out.dataset = flags.dataset;
  if (passed("--out-dir")) out.out_dir = flags.out_dir;
  if (passed("--grid-width")) out.grid_width = flags.grid_width;
  if (passed("--grid-height")) out.grid_height = flags.grid_height;
  if (passed("--goal-cell")) out.goal_cell = flags.goal_cell;
  if (passed("--noise-scale")) out.noise_scale = flags.noise_scale;
  if (passed("--max-episode-len")) out.max_episode_len = flags.max_episode_len;
  if (passed("--gamma")) out.gamma = flags.gamma;
  if (passed("--hidden")) out.hidden = flags.hidden;
  out.validate();
  return out;
}

struct SeedOutcome {
  std::uint64_t seed;
  double mean_return;
  double std_return;
};

// One fully seeded pipeline run; writes everything under dir.
SeedOutcome run_one_seed(ExperimentConfig cfg, std::uint64_t seed, const fs::path& dir) {
  cfg.seed = seed;
  fs::create_directories(dir);
  save_config(cfg, (dir / "config.json").string());

  TransitionDataset ds = load_dataset(cfg.dataset);
  if (cfg.reward_shift != 0.0)
    ds = normalize_rewards(ds, RewardNorm::Shift, cfg.reward_shift);

  GridworldEnv env(cfg.grid_spec(), seed);
  GaussianPolicy policy(ds.obs_dim(), ds.act_dim(), cfg.hidden, 0);

  if (cfg.baseline == "idrl") {
    IdrlResult res = run_idrl(ds, cfg.idrl_config(), &env, cfg.eval_episodes);
    write_reports_csv(res.reports, (dir / "reports.csv").string());
    write_timings_csv(res.reports, (dir / "timings.csv").string());
    write_ratio_dump_csv(res.final_ratios, (dir / "ratios.csv").string());
    save_dataset(res.final_dataset, (dir / "final_dataset.jsonl").string());
    policy = std::move(res.policy);
  } else if (cfg.baseline == "bc") {
    BcConfig bc = cfg.bc_config();
    bc.seed = seed;
    policy = weighted_bc(ds, std::vector<double>(ds.size(), 1.0), bc);
  } else if (cfg.baseline == "top10") {
    BcConfig bc = cfg.bc_config();
    bc.seed = seed;
    policy = top_x_bc(ds, 10.0, bc);
  } else {  // dwbc
    if (cfg.expert_dataset.empty())
      throw std::invalid_argument("config: expert_dataset required for baseline dwbc");
    TransitionDataset expert = load_dataset(cfg.expert_dataset);
    BcConfig bc = cfg.bc_config();
    bc.seed = seed;
    DwbcResult res = optimal_dwbc(ds, expert, cfg.dwbc_delta, bc);
    if (res.saturated)
      std::cerr << "warning: discriminator saturated for seed " << seed << "\n";
    policy = std::move(res.policy);
  }

  policy.save((dir / "policy.json").string());
  const EvalResult ev = evaluate_policy(env, policy, cfg.eval_episodes, seed + 77, true);
  std::ofstream f(dir / "eval.csv");
  f.precision(17);
  f << "seed,baseline,episodes,mean_return,std_return,mean_discounted\n";
  f << seed << "," << cfg.baseline << "," << cfg.eval_episodes << "," << ev.mean_return
    << "," << ev.std_return << "," << ev.mean_discounted << "\n";
  return {seed, ev.mean_return, ev.std_return};
}

int run_train(const ExperimentConfig& cfg) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  save_config(cfg, (out / "config.json").string());

  std::vector<SeedOutcome> outcomes(cfg.seeds);
  std::vector<std::string> errors(cfg.seeds);
  std::vector<std::thread> workers;
  for (int k = 0; k < cfg.seeds; ++k)
    workers.emplace_back([&, k] {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
      try {
        outcomes[k] = run_one_seed(cfg, seed, out / ("seed_" + std::to_string(seed)));
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    });
  for (auto& w : workers) w.join();
  for (int k = 0; k < cfg.seeds; ++k)
    if (!errors[k].empty()) {
      std::cerr << "error: seed " << cfg.seed + k << ": " << errors[k] << "\n";
      return 1;
    }

  std::ofstream f(out / "results.csv");
  f.precision(17);
  f << "seed,baseline,mean_return,std_return\n";
  double sum = 0.0;
  for (const SeedOutcome& o : outcomes) {
    f << o.seed << "," << cfg.baseline << "," << o.mean_return << "," << o.std_return
      << "\n";
    sum += o.mean_return;
  }
  std::cout << cfg.baseline << ": mean return over " << cfg.seeds
            << " seeds = " << sum / cfg.seeds << "\n";
  return 0;
}

TabularMDP preset_mdp(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "chain2") {
    TabularMDP m;
    m.n_states = 2;
    m.n_actions = 1;
    m.P = {{{0.0, 1.0}}, {{0.0, 1.0}}};
    m.R = {{0.0}, {1.0}};
    m.d0 = {1.0, 0.0};
    m.gamma = 0.5;
    return m;
  }
  if (name == "corrupt2") {
    TabularMDP m;
    m.n_states = 1;
    m.n_actions = 2;
    m.P = {{{1.0}, {1.0}}};
    m.R = {{1.0, 0.0}};
    m.d0 = {1.0};
    m.gamma = 0.0;
    return m;
  }
  if (name == "grid") return gridworld_mdp(cfg.grid_spec());
  throw std::invalid_argument("unknown --mdp preset: " + name +
                              " (expected chain2, corrupt2, or grid)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative dual-RL pipeline: dataset tools, training, oracles"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a gridworld dataset");
  std::string gen_env = "gridworld", gen_policy = "random", gen_out = "dataset.jsonl";
  std::size_t gen_n = 500;
  std::uint64_t gen_seed = 0;
  double gen_eps = 0.0;
  ExperimentConfig gen_cfg;
  gen->add_option("--env", gen_env, "environment name (gridworld)");
  gen->add_option("--policy", gen_policy, "random | expert");
  gen->add_option("--n", gen_n, "number of transitions");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--epsilon", gen_eps, "expert action noise probability");
  gen->add_option("--out", gen_out);
  gen->add_option("--grid-width", gen_cfg.grid_width);
  gen->add_option("--grid-height", gen_cfg.grid_height);
  gen->add_option("--goal-cell", gen_cfg.goal_cell);
  gen->add_option("--noise-scale", gen_cfg.noise_scale);
  gen->add_option("--max-episode-len", gen_cfg.max_episode_len);
  gen->add_option("--gamma", gen_cfg.gamma);

  // mix
  auto* mix = app.add_subcommand("mix", "mix expert and random datasets");
  std::string mix_expert, mix_random, mix_out = "mixed.jsonl";
  double mix_ratio = 0.05;
  std::size_t mix_total = 10000;
  std::uint64_t mix_seed = 0;
  mix->add_option("--expert", mix_expert)->required();
  mix->add_option("--random", mix_random)->required();
  mix->add_option("--ratio", mix_ratio, "expert transition fraction");
  mix->add_option("--total", mix_total);
  mix->add_option("--seed", mix_seed);
  mix->add_option("--out", mix_out);

  // train
  auto* train = app.add_subcommand("train", "run the full pipeline (or a baseline)");
  ExperimentConfig train_flags;
  std::string train_cfg_path;
  add_config_overrides(train, train_flags, train_cfg_path);
  bool full_preset = false;
  train->add_flag("--full-scale", full_preset, "start from the full-scale preset (larger nets, more steps)");

  // filter
  auto* filt = app.add_subcommand("filter", "one ratio-learning pass + dataset filter");
  ExperimentConfig filt_flags;
  std::string filt_cfg_path, filt_out = "filtered.jsonl", filt_weights_out;
  add_config_overrides(filt, filt_flags, filt_cfg_path);
  filt->add_option("--out", filt_out);
  filt->add_option("--weights-out", filt_weights_out, "optional ratio dump CSV");

  // eval
  auto* ev = app.add_subcommand("eval", "roll out a saved policy");
  std::string ev_policy;
  ExperimentConfig ev_cfg;
  int ev_episodes = 100;
  std::uint64_t ev_seed = 0;
  std::string ev_out;
  ev->add_option("--policy", ev_policy)->required();
  ev->add_option("--episodes", ev_episodes);
  ev->add_option("--seed", ev_seed);
  ev->add_option("--out", ev_out, "optional per-episode CSV");
  ev->add_option("--grid-width", ev_cfg.grid_width);
  ev->add_option("--grid-height", ev_cfg.grid_height);
  ev->add_option("--goal-cell", ev_cfg.goal_cell);
  ev->add_option("--noise-scale", ev_cfg.noise_scale);
  ev->add_option("--max-episode-len", ev_cfg.max_episode_len);
  ev->add_option("--gamma", ev_cfg.gamma);

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact tabular solvers");
  std::string orc_check = "solution", orc_mdp = "chain2", orc_out;
  double orc_alpha = 0.25;
  int orc_iters = 5;
  ExperimentConfig orc_cfg;
  orc->add_option("--check", orc_check, "solution | monotonicity | fixed-point");
  orc->add_option("--mdp", orc_mdp, "chain2 | corrupt2 | grid");
  orc->add_option("--alpha", orc_alpha);
  orc->add_option("--iters", orc_iters, "rounds for monotonicity");
  orc->add_option("--out", orc_out, "CSV dump path");
  orc->add_option("--grid-width", orc_cfg.grid_width);
  orc->add_option("--grid-height", orc_cfg.grid_height);
  orc->add_option("--goal-cell", orc_cfg.goal_cell);

  // report
  auto* rep = app.add_subcommand("report", "aggregate results.csv over run directories");
  std::string rep_runs, rep_out = "summary.csv";
  rep->add_option("--runs", rep_runs, "directory containing run subdirectories")
      ->required();
  rep->add_option("--out", rep_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (gen_env != "gridworld") throw std::invalid_argument("unknown --env: " + gen_env);
      GridworldEnv env(gen_cfg.grid_spec(), gen_seed);
      TransitionDataset ds = gen_policy == "expert"
                                 ? collect_expert(env, gen_n, gen_seed, gen_eps)
                                 : collect_random(env, gen_n, gen_seed);
      if (gen_policy != "expert" && gen_policy != "random")
        throw std::invalid_argument("unknown --policy: " + gen_policy);
      save_dataset(ds, gen_out);
      std::cout << "wrote " << ds.size() << " transitions to " << gen_out << "\n";
    } else if (*mix) {
      TransitionDataset mixed = mix_datasets(load_dataset(mix_expert),
                                             load_dataset(mix_random), mix_ratio,
                                             mix_total, mix_seed);
      save_dataset(mixed, mix_out);
      std::cout << "wrote " << mixed.size() << " transitions to " << mix_out << "\n";
    } else if (*train) {
      ExperimentConfig base = merge_config(train, train_flags, train_cfg_path);
      if (full_preset && train_cfg_path.empty()) {
        ExperimentConfig p = ExperimentConfig::full_scale();
        p.dataset = base.dataset;
        p.out_dir = base.out_dir;
        base = p;
      }
      if (base.dataset.empty())
        throw std::invalid_argument("config: dataset is required for train");
      return run_train(base);
    } else if (*filt) {
      ExperimentConfig cfg = merge_config(filt, filt_flags, filt_cfg_path);
      if (cfg.dataset.empty())
        throw std::invalid_argument("config: dataset is required for filter");
      TransitionDataset ds = load_dataset(cfg.dataset);
      if (cfg.reward_shift != 0.0)
        ds = normalize_rewards(ds, RewardNorm::Shift, cfg.reward_shift);
      IdrlConfig ic = cfg.idrl_config();
      DualTrainState dual = train_dual(ds, ic.backend, ic.spec, ic.dual);
      RatioEstimate ratios;
      ratios.action = action_ratios(dual, ds);
      if (ic.ratio_mode == RatioMode::Corrected) {
        CorrectionState corr = train_correction(ds, dual, ic.backend, ic.correction);
        ratios.state = state_ratios(corr, ds);
        ratios.combined = combined_ratios(corr, dual, ds);
      } else {
        ratios.combined = ratios.action;
      }
      TransitionDataset kept = filter_dataset(ds, ratios.combined, cfg.filter_threshold);
      save_dataset(kept, filt_out);
      if (!filt_weights_out.empty()) write_ratio_dump_csv(ratios, filt_weights_out);
      std::cout << "kept " << kept.size() << "/" << ds.size() << " transitions -> "
                << filt_out << "\n";
    } else if (*ev) {
      GaussianPolicy pi = GaussianPolicy::load(ev_policy);
      GridworldEnv env(ev_cfg.grid_spec(), ev_seed);
      const EvalResult res = evaluate_policy(env, pi, ev_episodes, ev_seed, true);
      std::cout << "mean_return " << res.mean_return << " std " << res.std_return
                << " mean_discounted " << res.mean_discounted << "\n";
      if (!ev_out.empty()) {
        std::ofstream f(ev_out);
        f.precision(17);
        f << "episode,return,steps\n";
        for (std::size_t i = 0; i < res.returns.size(); ++i)
          f << i << "," << res.returns[i] << "," << res.steps[i] << "\n";
      }
    } else if (*orc) {
      const TabularMDP mdp = preset_mdp(orc_mdp, orc_cfg);
      const std::size_t pairs =
          static_cast<std::size_t>(mdp.n_states) * mdp.n_actions;
      const std::vector<double> dD(pairs, 1.0 / static_cast<double>(pairs));
      if (orc_check == "solution") {
        const ExactSolution sol = exact_regularized_solution(mdp, dD, orc_alpha);
        std::cout << "objective " << sol.objective << " expected_reward "
                  << sol.expected_reward << " flow_residual " << sol.flow_residual
                  << "\n";
        if (!orc_out.empty()) write_oracle_csv(mdp, sol, orc_out);
      } else if (orc_check == "monotonicity") {
        const std::vector<double> vals =
            check_monotonicity(mdp, dD, orc_alpha, orc_iters, {});
        bool ok = true;
        for (std::size_t k = 0; k < vals.size(); ++k) {
          std::cout << "round " << k + 1 << " value " << vals[k] << "\n";
          if (k > 0 && vals[k] < vals[k - 1] - 1e-8) ok = false;
        }
        std::cout << (ok ? "non-decreasing" : "VIOLATION: decreasing step found") << "\n";
        if (!ok) return 1;
      } else if (orc_check == "fixed-point") {
        std::vector<std::vector<double>> mu(
            mdp.n_states, std::vector<double>(mdp.n_actions, 1.0 / mdp.n_actions));
        const FixedPointResult res = semi_gradient_fixed_point(mdp, mu, orc_alpha);
        for (int s = 0; s < mdp.n_states; ++s) std::cout << "V(" << s << ") = "
                                                         << res.V[s] << "\n";
      } else {
        throw std::invalid_argument("unknown --check: " + orc_check);
      }
    } else if (*rep) {
      struct Row {
        std::string run, line;
      };
      std::vector<Row> rows;
      for (const auto& entry : fs::directory_iterator(rep_runs)) {
        if (!entry.is_directory()) continue;
        const fs::path rcsv = entry.path() / "results.csv";
        if (!fs::exists(rcsv)) continue;
        std::ifstream f(rcsv);
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line))
          if (!line.empty()) rows.push_back({entry.path().filename().string(), line});
      }
      if (rows.empty()) throw std::runtime_error("no results.csv found under " + rep_runs);
      std::sort(rows.begin(), rows.end(),
                [](const Row& a, const Row& b) { return a.run < b.run; });
      // aggregate per run directory: mean +- std of the mean_return column
      std::ofstream out(rep_out);
      out.precision(17);
      out << "run,baseline,n_seeds,mean_return,std_return\n";
      std::string cur;
      std::vector<double> vals;
      std::string baseline;
      auto flush = [&] {
        if (vals.empty()) return;
        double m = 0.0;
        for (double v : vals) m += v;
        m /= vals.size();
        double var = 0.0;
        for (double v : vals) var += (v - m) * (v - m);
        out << cur << "," << baseline << "," << vals.size() << "," << m << ","
            << std::sqrt(var / vals.size()) << "\n";
      };
      for (const Row& r : rows) {
        if (r.run != cur) {
          flush();
          cur = r.run;
          vals.clear();
        }
        // columns: seed,baseline,mean_return,std_return
        std::stringstream ss(r.line);
        std::string seed, mean;
        std::getline(ss, seed, ',');
        std::getline(ss, baseline, ',');
        std::getline(ss, mean, ',');
        vals.push_back(std::stod(mean));
      }
      flush();
      std::cout << "wrote " << rep_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
