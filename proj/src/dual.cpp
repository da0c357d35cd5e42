#include "idrl/dual.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace idrl {

// ----------------------------------------------------------------- BackendSpec

std::unique_ptr<FunctionHead> BackendSpec::make_state_head(int obs_dim,
                                                           std::uint64_t seed) const {
  switch (kind) {
    case Kind::TabularIndex:
      return std::make_unique<TabularHead>(TabularCoder::state_index(n_states));
    case Kind::TabularGrid:
      return std::make_unique<TabularHead>(TabularCoder::grid_state(width, height));
    case Kind::Network:
      return std::make_unique<MlpHead>(obs_dim, hidden, 1, seed);
  }
  throw std::logic_error("bad backend kind");
}

std::unique_ptr<FunctionHead> BackendSpec::make_state_action_head(
    int obs_dim, int act_dim, std::uint64_t seed) const {
  switch (kind) {
    case Kind::TabularIndex:
      return std::make_unique<TabularHead>(
          TabularCoder::state_action_index(n_states, n_actions));
    case Kind::TabularGrid:
      return std::make_unique<TabularHead>(TabularCoder::grid_state_action(width, height));
    case Kind::Network:
      return std::make_unique<MlpHead>(obs_dim + act_dim, hidden, 1, seed);
  }
  throw std::logic_error("bad backend kind");
}

BackendSpec BackendSpec::tabular_index(int n_states, int n_actions) {
  BackendSpec b;
  b.kind = Kind::TabularIndex;
  b.n_states = n_states;
  b.n_actions = n_actions;
  return b;
}
BackendSpec BackendSpec::tabular_grid(int width, int height) {
  BackendSpec b;
  b.kind = Kind::TabularGrid;
  b.width = width;
  b.height = height;
  return b;
}
BackendSpec BackendSpec::network(std::vector<int> hidden) {
  BackendSpec b;
  b.kind = Kind::Network;
  b.hidden = std::move(hidden);
  return b;
}

// -------------------------------------------------------------------- helpers

namespace {

std::vector<double> concat_sa(const Transition& t) {
  std::vector<double> x(t.s);
  x.insert(x.end(), t.a.begin(), t.a.end());
  return x;
}

void check_finite_loss(double loss, const char* who) {
  if (!std::isfinite(loss)) throw std::runtime_error(std::string(who) + ": non-finite loss");
}

}  // namespace

DualTrainState make_dual_state(const TransitionDataset& ds, const BackendSpec& backend,
                               const DivergenceSpec& spec, const TrainConfig& cfg) {
  spec.validate();
  DualTrainState st;
  st.spec = spec;
  st.v = backend.make_state_head(ds.obs_dim(), cfg.seed * 4 + 1);
  st.q = backend.make_state_action_head(ds.obs_dim(), ds.act_dim(), cfg.seed * 4 + 2);
  st.q_target = TargetCopy(*st.q, cfg.tau);
  st.opt_v = std::make_unique<AdamOptimizer>(st.v->params().size(), cfg.lr);
  st.opt_q = std::make_unique<AdamOptimizer>(st.q->params().size(), cfg.lr);
  return st;
}

double v_loss(const DualTrainState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch) {
  const double scale = st.spec.conj_scale();
  double loss = 0.0;
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double v = st.v->value(t.s);
    const double qbar = st.q_target.head->value(concat_sa(t));
    loss += blend_v_terms(v, f_p_star((qbar - v) / scale), st.spec);
  }
  loss /= static_cast<double>(batch.size());
  check_finite_loss(loss, "v_loss");
  return loss;
}

std::vector<double> v_loss_grad(const DualTrainState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch) {
  const double scale = st.spec.conj_scale();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> g(st.v->params().size(), 0.0);
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double v = st.v->value(t.s);
    const double qbar = st.q_target.head->value(concat_sa(t));
    const double y = (qbar - v) / scale;
    const double dv =
        blend_dv_coeff(st.spec) - blend_conj_coeff(st.spec) * f_p_star_prime(y) / scale;
    st.v->accumulate_grad1(t.s, dv * inv_b, g);
  }
  return g;
}

double q_loss(const DualTrainState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch) {
  double loss = 0.0;
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double target =
        t.r + ds.discount() * (t.done ? 0.0 : 1.0) * st.v->value(t.s_next);
    const double q = st.q->value(concat_sa(t));
    loss += (q - target) * (q - target);
  }
  loss /= static_cast<double>(batch.size());
  check_finite_loss(loss, "q_loss");
  return loss;
}

std::vector<double> q_loss_grad(const DualTrainState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> g(st.q->params().size(), 0.0);
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double target =
        t.r + ds.discount() * (t.done ? 0.0 : 1.0) * st.v->value(t.s_next);
    const std::vector<double> sa = concat_sa(t);
    const double q = st.q->value(sa);
    st.q->accumulate_grad1(sa, 2.0 * (q - target) * inv_b, g);
  }
  return g;
}

std::vector<double> orthogonal_grad_mode(const DualTrainState& st,
                                         const TransitionDataset& ds,
                                         const std::vector<std::size_t>& batch,
                                         double eta) {
  const std::size_t n = st.v->params().size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double scale = st.spec.conj_scale();
  std::vector<double> g(n, 0.0), gs(n), gs2(n);
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double v = st.v->value(t.s);
    const double v2 = st.v->value(t.s_next);
    const double e = (t.r + ds.discount() * (t.done ? 0.0 : 1.0) * v2 - v) / scale;
    const double coef = blend_conj_coeff(st.spec) * f_p_star_prime(e) / scale;

    std::fill(gs.begin(), gs.end(), 0.0);
    std::fill(gs2.begin(), gs2.end(), 0.0);
    st.v->accumulate_grad1(t.s, 1.0, gs);
    st.v->accumulate_grad1(t.s_next, 1.0, gs2);
    const double ns = std::inner_product(gs.begin(), gs.end(), gs.begin(), 0.0);
    const double dot = std::inner_product(gs.begin(), gs.end(), gs2.begin(), 0.0);

    // first (linear) term of the blended objective
    for (std::size_t k = 0; k < n; ++k) g[k] += blend_dv_coeff(st.spec) * inv_b * gs[k];
    if (ns == 0.0) {
      // degenerate forward gradient: fall back to the semi-gradient for this sample
      for (std::size_t k = 0; k < n; ++k) g[k] += coef * inv_b * (-gs[k]);
      continue;
    }
    const double proj = dot / ns;
    const double ge = ds.discount() * eta;
    for (std::size_t k = 0; k < n; ++k) {
      const double perp = gs2[k] - proj * gs[k];
      g[k] += coef * inv_b * (ge * perp - gs[k]);
    }
  }
  return g;
}

namespace {

double probe_mean_abs_v(const DualTrainState& st, const TransitionDataset& ds,
                        const std::vector<std::size_t>& batch) {
  double s = 0.0;
  for (std::size_t i : batch) s += std::abs(st.v->value(ds[i].s));
  return s / static_cast<double>(batch.size());
}

double probe_mean_ratio(const DualTrainState& st, const TransitionDataset& ds,
                        const std::vector<std::size_t>& batch) {
  double s = 0.0;
  for (std::size_t i : batch) s += action_ratio(st, ds[i].s, ds[i].a);
  return s / static_cast<double>(batch.size());
}

}  // namespace

DualTrainState train_dual(const TransitionDataset& ds, const BackendSpec& backend,
                          const DivergenceSpec& spec, const TrainConfig& cfg) {
  if (ds.size() == 0) throw std::invalid_argument("train_dual: empty dataset");
  DualTrainState st = make_dual_state(ds, backend, spec, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  std::vector<std::size_t> batch(std::min<std::size_t>(cfg.batch_size, ds.size()));
  std::vector<std::size_t> probe(std::min<std::size_t>(1024, ds.size()));
  std::iota(probe.begin(), probe.end(), 0);
  // a batch covering the whole dataset degenerates to deterministic full-batch
  const bool full_batch = batch.size() == ds.size();
  if (full_batch) std::iota(batch.begin(), batch.end(), 0);

  for (int step = 0; step < cfg.steps; ++step) {
    if (!full_batch)
      for (auto& i : batch) i = pick(rng);
    st.opt_q->step(st.q->params(), q_loss_grad(st, ds, batch));
    st.q_target.soft_update_from(*st.q);
    if (!full_batch)
      for (auto& i : batch) i = pick(rng);
    if (cfg.orthogonal_grad)
      st.opt_v->step(st.v->params(), orthogonal_grad_mode(st, ds, batch, cfg.eta));
    else
      st.opt_v->step(st.v->params(), v_loss_grad(st, ds, batch));
    ++st.step;
    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps) {
      const double mav = probe_mean_abs_v(st, ds, probe);
      if (mav > cfg.divergence_bound)
        throw std::runtime_error("train_dual: diverged at step " + std::to_string(step + 1) +
                                 ", mean |V| = " + std::to_string(mav));
      st.curve.push_back({st.step, v_loss(st, ds, probe), q_loss(st, ds, probe),
                          probe_mean_ratio(st, ds, probe)});
    }
  }
  return st;
}

double action_ratio(const DualTrainState& st, const std::vector<double>& s,
                    const std::vector<double>& a) {
  std::vector<double> sa(s);
  sa.insert(sa.end(), a.begin(), a.end());
  const double y = (st.q->value(sa) - st.v->value(s)) / st.spec.conj_scale();
  return std::max(0.0, f_prime_inv(y));
}

double policy_ratio(const DualTrainState& st, const std::vector<double>& s,
                    const std::vector<double>& a) {
  const double r = action_ratio(st, s, a);
  if (st.spec.mode == BlendMode::LambdaForm)
    return r * st.spec.lambda / (1.0 - st.spec.lambda);
  return r;
}

std::vector<double> action_ratios(const DualTrainState& st, const TransitionDataset& ds) {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = action_ratio(st, ds[i].s, ds[i].a);
  return out;
}

std::vector<double> policy_ratios(const DualTrainState& st, const TransitionDataset& ds) {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = policy_ratio(st, ds[i].s, ds[i].a);
  return out;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path,
                     const std::string& loss_a_name, const std::string& loss_b_name) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "step," << loss_a_name << "," << loss_b_name << ",mean_ratio\n";
  f.precision(17);
  for (const CurvePoint& p : curve)
    f << p.step << "," << p.loss_a << "," << p.loss_b << "," << p.mean_ratio << "\n";
}

}  // namespace idrl
