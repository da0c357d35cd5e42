#include "idrl/config.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace idrl {

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: " + field + " " + why);
  };
  if (backend != "tabular" && backend != "network")
    bad("backend", "must be 'tabular' or 'network'");
  if (mode != "lambda" && mode != "alpha") bad("mode", "must be 'lambda' or 'alpha'");
  if (ratio_mode != "corrected" && ratio_mode != "action")
    bad("ratio_mode", "must be 'corrected' or 'action'");
  if (baseline != "idrl" && baseline != "bc" && baseline != "top10" && baseline != "dwbc")
    bad("baseline", "must be one of idrl, bc, top10, dwbc");
  if (seeds < 1) bad("seeds", "must be >= 1");
  if (grid_width < 2 || grid_height < 2) bad("grid_width/grid_height", "must be >= 2");
  if (start_cell < 0 || start_cell >= grid_width * grid_height)
    bad("start_cell", "out of range");
  if (goal_cell < 0 || goal_cell >= grid_width * grid_height)
    bad("goal_cell", "out of range");
  if (!(noise_scale >= 0.0 && noise_scale < 0.5)) bad("noise_scale", "must be in [0,0.5)");
  if (max_episode_len < 1) bad("max_episode_len", "must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) bad("gamma", "must be in [0,1)");
  if (iterations < 1) bad("iterations", "must be >= 1");
  if (n1 < 1 || n2 < 1) bad("n1/n2", "must be >= 1");
  if (!(lambda > 0.0 && lambda < 1.0)) bad("lambda", "must be in (0,1)");
  if (!(alpha > 0.0)) bad("alpha", "must be > 0");
  if (batch_size < 1) bad("batch_size", "must be >= 1");
  if (!(lr > 0.0)) bad("lr", "must be > 0");
  if (!(tau > 0.0 && tau <= 1.0)) bad("tau", "must be in (0,1]");
  if (filter_threshold < 0.0) bad("filter_threshold", "must be >= 0");
  if (!(eta > 0.0)) bad("eta", "must be > 0");
  if (!(bc_lr > 0.0)) bad("bc_lr", "must be > 0");
  if (bc_steps < 1) bad("bc_steps", "must be >= 1");
  if (dwbc_delta < 0.0) bad("dwbc_delta", "must be >= 0");
  if (eval_episodes < 1) bad("eval_episodes", "must be >= 1");
  for (int h : hidden)
    if (h < 1) bad("hidden", "layer widths must be >= 1");
}

GridworldSpec ExperimentConfig::grid_spec() const {
  GridworldSpec g;
  g.width = grid_width;
  g.height = grid_height;
  g.start_cell = start_cell;
  g.goal_cell = goal_cell;
  g.noise_scale = noise_scale;
  g.max_episode_len = max_episode_len;
  g.gamma = gamma;
  return g;
}

DivergenceSpec ExperimentConfig::divergence() const {
  DivergenceSpec spec;
  spec.alpha = alpha;
  spec.lambda = lambda;
  spec.mode = mode == "alpha" ? BlendMode::AlphaForm : BlendMode::LambdaForm;
  spec.validate();
  return spec;
}

BackendSpec ExperimentConfig::backend_spec() const {
  if (backend == "tabular") return BackendSpec::tabular_grid(grid_width, grid_height);
  return BackendSpec::network(hidden);
}

IdrlConfig ExperimentConfig::idrl_config() const {
  IdrlConfig c;
  c.iterations = iterations;
  c.dual.steps = n1;
  c.dual.batch_size = batch_size;
  c.dual.lr = lr;
  c.dual.tau = tau;
  c.dual.orthogonal_grad = orthogonal_grad;
  c.dual.eta = eta;
  c.correction = c.dual;
  c.correction.steps = n2;
  c.spec = divergence();
  c.backend = backend_spec();
  c.ratio_mode = ratio_mode == "action" ? RatioMode::ActionOnly : RatioMode::Corrected;
  c.filter_threshold = filter_threshold;
  c.bc = bc_config();
  c.seed = seed;
  return c;
}

BcConfig ExperimentConfig::bc_config() const {
  BcConfig c;
  c.steps = bc_steps;
  c.batch_size = batch_size;
  c.lr = bc_lr;
  c.seed = seed;
  c.hidden = hidden;
  return c;
}

ExperimentConfig ExperimentConfig::full_scale() {
  ExperimentConfig c;
  c.n1 = 500000;
  c.n2 = 500000;
  c.hidden = {256, 256, 256};
  c.seeds = 7;
  return c;
}

namespace {

using nlohmann::json;

json to_json(const ExperimentConfig& c) {
  return json{{"seed", c.seed},
              {"seeds", c.seeds},
              {"backend", c.backend},
              {"hidden", c.hidden},
              {"grid_width", c.grid_width},
              {"grid_height", c.grid_height},
              {"start_cell", c.start_cell},
              {"goal_cell", c.goal_cell},
              {"noise_scale", c.noise_scale},
              {"max_episode_len", c.max_episode_len},
              {"gamma", c.gamma},
              {"iterations", c.iterations},
              {"n1", c.n1},
              {"n2", c.n2},
              {"mode", c.mode},
              {"lambda", c.lambda},
              {"alpha", c.alpha},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"tau", c.tau},
              {"filter_threshold", c.filter_threshold},
              {"ratio_mode", c.ratio_mode},
              {"orthogonal_grad", c.orthogonal_grad},
              {"eta", c.eta},
              {"reward_shift", c.reward_shift},
              {"bc_steps", c.bc_steps},
              {"bc_lr", c.bc_lr},
              {"baseline", c.baseline},
              {"dwbc_delta", c.dwbc_delta},
              {"expert_dataset", c.expert_dataset},
              {"eval_episodes", c.eval_episodes},
              {"dataset", c.dataset},
              {"out_dir", c.out_dir}};
}

template <typename T>
void pull(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  ExperimentConfig c;
  pull(j, "seed", c.seed);
  pull(j, "seeds", c.seeds);
  pull(j, "backend", c.backend);
  pull(j, "hidden", c.hidden);
  pull(j, "grid_width", c.grid_width);
  pull(j, "grid_height", c.grid_height);
  pull(j, "start_cell", c.start_cell);
  pull(j, "goal_cell", c.goal_cell);
  pull(j, "noise_scale", c.noise_scale);
  pull(j, "max_episode_len", c.max_episode_len);
  pull(j, "gamma", c.gamma);
  pull(j, "iterations", c.iterations);
  pull(j, "n1", c.n1);
  pull(j, "n2", c.n2);
  pull(j, "mode", c.mode);
  pull(j, "lambda", c.lambda);
  pull(j, "alpha", c.alpha);
  pull(j, "batch_size", c.batch_size);
  pull(j, "lr", c.lr);
  pull(j, "tau", c.tau);
  pull(j, "filter_threshold", c.filter_threshold);
  pull(j, "ratio_mode", c.ratio_mode);
  pull(j, "orthogonal_grad", c.orthogonal_grad);
  pull(j, "eta", c.eta);
  pull(j, "reward_shift", c.reward_shift);
  pull(j, "bc_steps", c.bc_steps);
  pull(j, "bc_lr", c.bc_lr);
  pull(j, "baseline", c.baseline);
  pull(j, "dwbc_delta", c.dwbc_delta);
  pull(j, "expert_dataset", c.expert_dataset);
  pull(j, "eval_episodes", c.eval_episodes);
  pull(j, "dataset", c.dataset);
  pull(j, "out_dir", c.out_dir);
  c.validate();
  return c;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  return from_json(j);
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  return to_json(cfg).dump();
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << config_to_json_text(cfg) << "\n";
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

}  // namespace idrl
