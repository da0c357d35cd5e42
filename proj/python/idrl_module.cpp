#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "idrl/config.hpp"
#include "idrl/oracle.hpp"

namespace py = pybind11;
using namespace idrl;

namespace {

TabularMDP mdp_from_py(int n_states, int n_actions,
                       std::vector<std::vector<std::vector<double>>> P,
                       std::vector<std::vector<double>> R, std::vector<double> d0,
                       double gamma) {
  TabularMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.P = std::move(P);
  m.R = std::move(R);
  m.d0 = std::move(d0);
  m.gamma = gamma;
  m.validate();
  return m;
}

py::dict dataset_info(const std::string& path) {
  const TransitionDataset ds = load_dataset(path);
  double mean_r = 0.0;
  for (const Transition& t : ds.transitions()) mean_r += t.r;
  if (ds.size() > 0) mean_r /= static_cast<double>(ds.size());
  py::dict d;
  d["count"] = ds.size();
  d["obs_dim"] = ds.obs_dim();
  d["act_dim"] = ds.act_dim();
  d["discount"] = ds.discount();
  d["name"] = ds.name();
  d["mean_reward"] = mean_r;
  d["content_hash"] = ds.content_hash();
  d["n_trajectories"] = ds.trajectories().size();
  return d;
}

void gen_dataset(const std::string& path, const std::string& policy, std::size_t n,
                 std::uint64_t seed, double epsilon, int width, int height, int goal_cell) {
  GridworldSpec spec = default_gridworld();
  spec.width = width;
  spec.height = height;
  spec.goal_cell = goal_cell;
  GridworldEnv env(spec, seed);
  TransitionDataset ds = policy == "expert" ? collect_expert(env, n, seed, epsilon)
                                            : collect_random(env, n, seed);
  save_dataset(ds, path);
}

void mix_files(const std::string& expert, const std::string& random, double ratio,
               std::size_t total, std::uint64_t seed, const std::string& out) {
  save_dataset(mix_datasets(load_dataset(expert), load_dataset(random), ratio, total, seed),
               out);
}

py::dict run_pipeline(const std::string& config_json, const std::string& dataset_path) {
  ExperimentConfig cfg = config_from_json_text(config_json);
  if (!dataset_path.empty()) cfg.dataset = dataset_path;
  TransitionDataset ds = load_dataset(cfg.dataset);
  if (cfg.reward_shift != 0.0)
    ds = normalize_rewards(ds, RewardNorm::Shift, cfg.reward_shift);
  GridworldEnv env(cfg.grid_spec(), cfg.seed);
  IdrlResult res = run_idrl(ds, cfg.idrl_config(), &env, cfg.eval_episodes);
  py::dict out;
  out["eval_return"] = res.reports.back().eval_return;
  out["final_size"] = res.final_dataset.size();
  py::list reports;
  for (const IterationReport& r : res.reports) {
    py::dict rep;
    rep["iteration"] = r.iteration;
    rep["retained"] = r.retained;
    rep["mean_reward"] = r.mean_reward;
    rep["mean_fragment_len"] = r.mean_fragment_len;
    reports.append(rep);
  }
  out["reports"] = reports;
  return out;
}

py::dict eval_policy_file(const std::string& policy_path, int episodes, std::uint64_t seed,
                          int width, int height, int goal_cell) {
  GridworldSpec spec = default_gridworld();
  spec.width = width;
  spec.height = height;
  spec.goal_cell = goal_cell;
  GridworldEnv env(spec, seed);
  GaussianPolicy pi = GaussianPolicy::load(policy_path);
  const EvalResult res = evaluate_policy(env, pi, episodes, seed, true);
  py::dict d;
  d["mean_return"] = res.mean_return;
  d["std_return"] = res.std_return;
  d["mean_discounted"] = res.mean_discounted;
  d["returns"] = res.returns;
  return d;
}

}  // namespace

PYBIND11_MODULE(_idrl, m) {
  m.doc() = "Iterative dual-RL core: conjugates, datasets, pipeline, exact oracles";

  m.def("f_value", &f_value, "chi-squared generator f(x) = (x-1)^2");
  m.def("f_prime", &f_prime);
  m.def("f_prime_inv", &f_prime_inv);
  m.def("f_p_star", &f_p_star, "non-negativity-constrained convex conjugate");
  m.def("f_p_star_prime", &f_p_star_prime);

  m.def("gen_dataset", &gen_dataset, py::arg("path"), py::arg("policy") = "random",
        py::arg("n") = 500, py::arg("seed") = 0, py::arg("epsilon") = 0.0,
        py::arg("width") = 5, py::arg("height") = 5, py::arg("goal_cell") = 24);
  m.def("mix_files", &mix_files, py::arg("expert"), py::arg("random"), py::arg("ratio"),
        py::arg("total"), py::arg("seed"), py::arg("out"));
  m.def("dataset_info", &dataset_info, py::arg("path"));

  m.def("default_config_json",
        [] { return config_to_json_text(ExperimentConfig{}); });
  m.def("full_scale_config_json",
        [] { return config_to_json_text(ExperimentConfig::full_scale()); });
  m.def("run_pipeline", &run_pipeline, py::arg("config_json"),
        py::arg("dataset_path") = "");
  m.def("eval_policy_file", &eval_policy_file, py::arg("policy_path"),
        py::arg("episodes") = 100, py::arg("seed") = 0, py::arg("width") = 5,
        py::arg("height") = 5, py::arg("goal_cell") = 24);

  m.def(
      "exact_visitation",
      [](int n_states, int n_actions, std::vector<std::vector<std::vector<double>>> P,
         std::vector<std::vector<double>> R, std::vector<double> d0, double gamma,
         std::vector<std::vector<double>> policy) {
        return exact_visitation(
            mdp_from_py(n_states, n_actions, std::move(P), std::move(R), std::move(d0),
                        gamma),
            policy);
      },
      py::arg("n_states"), py::arg("n_actions"), py::arg("P"), py::arg("R"),
      py::arg("d0"), py::arg("gamma"), py::arg("policy"));

  m.def(
      "exact_regularized_solution",
      [](int n_states, int n_actions, std::vector<std::vector<std::vector<double>>> P,
         std::vector<std::vector<double>> R, std::vector<double> d0, double gamma,
         std::vector<double> dD, double alpha) {
        const ExactSolution sol = exact_regularized_solution(
            mdp_from_py(n_states, n_actions, std::move(P), std::move(R), std::move(d0),
                        gamma),
            dD, alpha);
        py::dict d;
        d["d"] = sol.d;
        d["w_sa"] = sol.w_sa;
        d["w_s"] = sol.w_s;
        d["w_a_given_s"] = sol.w_a_given_s;
        d["objective"] = sol.objective;
        d["expected_reward"] = sol.expected_reward;
        d["flow_residual"] = sol.flow_residual;
        return d;
      },
      py::arg("n_states"), py::arg("n_actions"), py::arg("P"), py::arg("R"),
      py::arg("d0"), py::arg("gamma"), py::arg("dD"), py::arg("alpha"));

  m.def(
      "check_monotonicity",
      [](int n_states, int n_actions, std::vector<std::vector<std::vector<double>>> P,
         std::vector<std::vector<double>> R, std::vector<double> d0, double gamma,
         std::vector<double> dD, double alpha, int iterations) {
        return check_monotonicity(
            mdp_from_py(n_states, n_actions, std::move(P), std::move(R), std::move(d0),
                        gamma),
            std::move(dD), alpha, iterations, {});
      },
      py::arg("n_states"), py::arg("n_actions"), py::arg("P"), py::arg("R"),
      py::arg("d0"), py::arg("gamma"), py::arg("dD"), py::arg("alpha"),
      py::arg("iterations") = 5);
}
