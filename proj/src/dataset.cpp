#include "idrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace idrl {

namespace {

void check_finite_vec(const std::vector<double>& v, const char* what, std::size_t row) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::invalid_argument("transition " + std::to_string(row) + ": non-finite " + what);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_doubles(std::uint64_t h, const std::vector<double>& v) {
  return v.empty() ? h : fnv1a(h, v.data(), v.size() * sizeof(double));
}

}  // namespace

TransitionDataset::TransitionDataset(int obs_dim, int act_dim, double discount,
                                     std::string name, std::vector<Transition> transitions)
    : obs_dim_(obs_dim),
      act_dim_(act_dim),
      discount_(discount),
      name_(std::move(name)),
      transitions_(std::move(transitions)) {
  if (obs_dim_ <= 0 || act_dim_ <= 0)
    throw std::invalid_argument("TransitionDataset: dimensions must be positive");
  if (!(discount_ >= 0.0 && discount_ < 1.0))
    throw std::invalid_argument("TransitionDataset: discount must be in [0,1)");
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    const Transition& t = transitions_[i];
    if (static_cast<int>(t.s.size()) != obs_dim_ ||
        static_cast<int>(t.s_next.size()) != obs_dim_)
      throw std::invalid_argument("transition " + std::to_string(i) + ": obs dim mismatch");
    if (static_cast<int>(t.a.size()) != act_dim_)
      throw std::invalid_argument("transition " + std::to_string(i) + ": act dim mismatch");
    check_finite_vec(t.s, "state", i);
    check_finite_vec(t.a, "action", i);
    check_finite_vec(t.s_next, "next state", i);
    if (!std::isfinite(t.r))
      throw std::invalid_argument("transition " + std::to_string(i) + ": non-finite reward");
  }
}

std::uint64_t TransitionDataset::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a(h, &obs_dim_, sizeof(obs_dim_));
  h = fnv1a(h, &act_dim_, sizeof(act_dim_));
  h = fnv1a(h, &discount_, sizeof(discount_));
  for (const Transition& t : transitions_) {
    h = hash_doubles(h, t.s);
    h = hash_doubles(h, t.a);
    h = fnv1a(h, &t.r, sizeof(t.r));
    h = hash_doubles(h, t.s_next);
    const std::uint8_t d = t.done ? 1 : 0;
    h = fnv1a(h, &d, sizeof(d));
    h = fnv1a(h, &t.traj_id, sizeof(t.traj_id));
    h = fnv1a(h, &t.step, sizeof(t.step));
  }
  return h;
}

std::vector<std::pair<std::uint32_t, std::vector<std::size_t>>>
TransitionDataset::trajectories() const {
  std::vector<std::pair<std::uint32_t, std::vector<std::size_t>>> out;
  std::map<std::uint32_t, std::size_t> slot;
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    const std::uint32_t id = transitions_[i].traj_id;
    auto it = slot.find(id);
    if (it == slot.end()) {
      slot.emplace(id, out.size());
      out.push_back({id, {i}});
    } else {
      out[it->second].second.push_back(i);
    }
  }
  return out;
}

std::vector<std::pair<std::uint32_t, double>> TransitionDataset::trajectory_returns() const {
  std::vector<std::pair<std::uint32_t, double>> out;
  for (const auto& [id, idx] : trajectories()) {
    double ret = 0.0;
    for (std::size_t i : idx) ret += transitions_[i].r;
    out.push_back({id, ret});
  }
  return out;
}

TransitionDataset TransitionDataset::with_transitions(std::vector<Transition> t,
                                                      std::string name) const {
  return TransitionDataset(obs_dim_, act_dim_, discount_, std::move(name), std::move(t));
}

TransitionDataset normalize_rewards(const TransitionDataset& ds, RewardNorm mode,
                                    double shift) {
  if (mode == RewardNorm::None) return ds;
  std::vector<Transition> out = ds.transitions();
  if (mode == RewardNorm::Shift) {
    for (Transition& t : out) t.r -= shift;
    return ds.with_transitions(std::move(out), ds.name() + ":shift");
  }
  auto returns = ds.trajectory_returns();
  if (returns.size() < 2)
    throw std::invalid_argument("range-standardize needs at least 2 trajectories");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [id, ret] : returns) {
    lo = std::min(lo, ret);
    hi = std::max(hi, ret);
  }
  const double range = hi - lo;
  if (range <= 0.0) throw std::invalid_argument("range-standardize: zero return range");
  for (Transition& t : out) t.r /= range;
  return ds.with_transitions(std::move(out), ds.name() + ":std");
}

TransitionDataset mix_datasets(const TransitionDataset& expert,
                               const TransitionDataset& random, double expert_ratio,
                               std::size_t total, std::uint64_t seed) {
  if (!(expert_ratio > 0.0 && expert_ratio < 1.0))
    throw std::invalid_argument("mix_datasets: expert_ratio must be in (0,1)");
  if (expert.obs_dim() != random.obs_dim() || expert.act_dim() != random.act_dim())
    throw std::invalid_argument("mix_datasets: source dimension mismatch");
  const std::size_t n_expert = static_cast<std::size_t>(expert_ratio * total);
  const std::size_t n_random = total - n_expert;
  if (expert.size() < n_expert)
    throw std::invalid_argument("mix_datasets: expert source '" + expert.name() +
                                "' has only " + std::to_string(expert.size()) + " of " +
                                std::to_string(n_expert) + " needed transitions");
  if (random.size() < n_random)
    throw std::invalid_argument("mix_datasets: random source '" + random.name() +
                                "' has only " + std::to_string(random.size()) + " of " +
                                std::to_string(n_random) + " needed transitions");

  std::mt19937_64 rng(seed);

  // Take whole trajectories in shuffled order until the per-source quota is
  // met; the last one may be truncated so counts match exactly.
  struct Piece {
    const TransitionDataset* src;
    std::vector<std::size_t> idx;
  };
  auto take = [&rng](const TransitionDataset& src, std::size_t quota) {
    std::vector<Piece> pieces;
    auto trajs = src.trajectories();
    std::shuffle(trajs.begin(), trajs.end(), rng);
    std::size_t got = 0;
    for (const auto& [id, idx] : trajs) {
      if (got >= quota) break;
      Piece p{&src, idx};
      if (got + p.idx.size() > quota) p.idx.resize(quota - got);
      got += p.idx.size();
      pieces.push_back(std::move(p));
    }
    return pieces;
  };

  std::vector<Piece> pieces = take(expert, n_expert);
  std::vector<Piece> rnd = take(random, n_random);
  pieces.insert(pieces.end(), std::make_move_iterator(rnd.begin()),
                std::make_move_iterator(rnd.end()));
  std::shuffle(pieces.begin(), pieces.end(), rng);

  std::vector<Transition> out;
  out.reserve(total);
  std::uint32_t next_id = 0;
  for (const Piece& p : pieces) {
    for (std::size_t k = 0; k < p.idx.size(); ++k) {
      Transition t = (*p.src)[p.idx[k]];
      t.traj_id = next_id;
      t.step = static_cast<std::uint32_t>(k);
      out.push_back(std::move(t));
    }
    ++next_id;
  }
  return TransitionDataset(expert.obs_dim(), expert.act_dim(), expert.discount(),
                           "mixed", std::move(out));
}

void save_dataset(const TransitionDataset& ds, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  nlohmann::json header = {{"version", 1},       {"obs_dim", ds.obs_dim()},
                           {"act_dim", ds.act_dim()}, {"count", ds.size()},
                           {"discount", ds.discount()}, {"name", ds.name()}};
  f << header.dump() << "\n";
  for (const Transition& t : ds.transitions()) {
    nlohmann::json row = {{"s", t.s},           {"a", t.a},   {"r", t.r},
                          {"s2", t.s_next},     {"done", t.done ? 1 : 0},
                          {"traj", t.traj_id},  {"t", t.step}};
    f << row.dump() << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

TransitionDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + ":1: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ":1: malformed header: " + e.what());
  }
  const int obs_dim = header.at("obs_dim").get<int>();
  const int act_dim = header.at("act_dim").get<int>();
  const std::size_t count = header.at("count").get<std::size_t>();
  const double discount = header.at("discount").get<double>();
  const std::string name = header.value("name", "");

  std::vector<Transition> transitions;
  transitions.reserve(count);
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": parse error: " +
                               e.what());
    }
    Transition t;
    t.s = row.at("s").get<std::vector<double>>();
    t.a = row.at("a").get<std::vector<double>>();
    t.r = row.at("r").get<double>();
    t.s_next = row.at("s2").get<std::vector<double>>();
    t.done = row.at("done").get<int>() != 0;
    t.traj_id = row.at("traj").get<std::uint32_t>();
    t.step = row.at("t").get<std::uint32_t>();
    if (static_cast<int>(t.s.size()) != obs_dim ||
        static_cast<int>(t.s_next.size()) != obs_dim ||
        static_cast<int>(t.a.size()) != act_dim)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": dimension mismatch with header");
    transitions.push_back(std::move(t));
  }
  if (transitions.size() != count)
    throw std::runtime_error(path + ": header count " + std::to_string(count) +
                             " != " + std::to_string(transitions.size()) + " rows");
  try {
    return TransitionDataset(obs_dim, act_dim, discount, name, std::move(transitions));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace idrl
