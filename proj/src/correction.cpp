#include "idrl/correction.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace idrl {

namespace {

double tu_value(const FunctionHead& u, const TransitionDataset& ds, const Transition& t) {
  return t.done ? 0.0 : ds.discount() * u.value(t.s_next);
}

void check_finite_loss(double loss, const char* who) {
  if (!std::isfinite(loss)) throw std::runtime_error(std::string(who) + ": non-finite loss");
}

}  // namespace

CorrectionState make_correction_state(const TransitionDataset& ds,
                                      const std::vector<double>& action_ratio,
                                      const BackendSpec& backend,
                                      const DivergenceSpec& spec, const TrainConfig& cfg) {
  if (action_ratio.size() != ds.size())
    throw std::invalid_argument("correction: ratio/dataset misalignment");
  spec.validate();
  CorrectionState st;
  st.spec = spec;
  st.action_ratio = action_ratio;
  st.u = backend.make_state_head(ds.obs_dim(), cfg.seed * 4 + 3);
  st.w = backend.make_state_head(ds.obs_dim(), cfg.seed * 4 + 4);
  st.opt_u = std::make_unique<AdamOptimizer>(st.u->params().size(), cfg.lr);
  st.opt_w = std::make_unique<AdamOptimizer>(st.w->params().size(), cfg.lr);
  return st;
}

double w_loss(const CorrectionState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch) {
  double loss = 0.0;
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double w = st.w->value(t.s);
    const double g = st.action_ratio[i] * (tu_value(*st.u, ds, t) - st.u->value(t.s));
    loss += f_value(w) - g * w;
  }
  loss /= static_cast<double>(batch.size());
  check_finite_loss(loss, "w_loss");
  return loss;
}

std::vector<double> w_loss_grad(const CorrectionState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> grad(st.w->params().size(), 0.0);
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double w = st.w->value(t.s);
    const double g = st.action_ratio[i] * (tu_value(*st.u, ds, t) - st.u->value(t.s));
    st.w->accumulate_grad1(t.s, (f_prime(w) - g) * inv_b, grad);
  }
  return grad;
}

double u_loss(const CorrectionState& st, const TransitionDataset& ds,
              const std::vector<std::size_t>& batch) {
  double loss = 0.0;
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double u = st.u->value(t.s);
    const double tu = tu_value(*st.u, ds, t);
    const double mw = std::max(0.0, st.w->value(t.s));
    loss += (u - tu) + mw * st.action_ratio[i] * (tu - u);
  }
  loss /= static_cast<double>(batch.size());
  check_finite_loss(loss, "u_loss");
  return loss;
}

std::vector<double> u_loss_grad(const CorrectionState& st, const TransitionDataset& ds,
                                const std::vector<std::size_t>& batch) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> grad(st.u->params().size(), 0.0);
  for (std::size_t i : batch) {
    const Transition& t = ds[i];
    const double mw = std::max(0.0, st.w->value(t.s));
    const double c = mw * st.action_ratio[i];
    st.u->accumulate_grad1(t.s, (1.0 - c) * inv_b, grad);
    if (!t.done) {
      const double dtu = ds.discount() * (c - 1.0);
      st.u->accumulate_grad1(t.s_next, dtu * inv_b, grad);
    }
  }
  return grad;
}

CorrectionState train_correction(const TransitionDataset& ds,
                                 const std::vector<double>& action_ratio,
                                 const BackendSpec& backend, const DivergenceSpec& spec,
                                 const TrainConfig& cfg) {
  if (ds.size() == 0) throw std::invalid_argument("train_correction: empty dataset");
  CorrectionState st = make_correction_state(ds, action_ratio, backend, spec, cfg);
  std::mt19937_64 rng(cfg.seed + 0x517cc1b727220a95ull);
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  std::vector<std::size_t> batch(std::min<std::size_t>(cfg.batch_size, ds.size()));
  std::vector<std::size_t> probe(std::min<std::size_t>(1024, ds.size()));
  std::iota(probe.begin(), probe.end(), 0);
  const bool full_batch = batch.size() == ds.size();
  if (full_batch) std::iota(batch.begin(), batch.end(), 0);

  for (int step = 0; step < cfg.steps; ++step) {
    if (!full_batch)
      for (auto& i : batch) i = pick(rng);
    st.opt_w->step(st.w->params(), w_loss_grad(st, ds, batch));
    if (!full_batch)
      for (auto& i : batch) i = pick(rng);
    st.opt_u->step(st.u->params(), u_loss_grad(st, ds, batch));
    ++st.step;
    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps) {
      double mean_ratio = 0.0, mean_abs_u = 0.0;
      for (std::size_t i : probe) {
        mean_ratio += std::max(0.0, st.w->value(ds[i].s));
        mean_abs_u += std::abs(st.u->value(ds[i].s));
      }
      mean_ratio /= static_cast<double>(probe.size());
      mean_abs_u /= static_cast<double>(probe.size());
      if (mean_abs_u > cfg.divergence_bound)
        throw std::runtime_error("train_correction: diverged at step " +
                                 std::to_string(step + 1) +
                                 ", mean |U| = " + std::to_string(mean_abs_u));
      st.curve.push_back({st.step, w_loss(st, ds, probe), u_loss(st, ds, probe), mean_ratio});
    }
  }
  return st;
}

CorrectionState train_correction(const TransitionDataset& ds, const DualTrainState& dual,
                                 const BackendSpec& backend, const TrainConfig& cfg) {
  return train_correction(ds, policy_ratios(dual, ds), backend, dual.spec, cfg);
}

double state_ratio(const CorrectionState& st, const std::vector<double>& s) {
  return std::max(0.0, st.w->value(s));
}

double combined_ratio(const CorrectionState& st, const DualTrainState& dual,
                      const std::vector<double>& s, const std::vector<double>& a) {
  return state_ratio(st, s) * action_ratio(dual, s, a);
}

std::vector<double> state_ratios(const CorrectionState& st, const TransitionDataset& ds) {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = state_ratio(st, ds[i].s);
  return out;
}

std::vector<double> combined_ratios(const CorrectionState& st, const DualTrainState& dual,
                                    const TransitionDataset& ds) {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    out[i] = combined_ratio(st, dual, ds[i].s, ds[i].a);
  return out;
}

}  // namespace idrl
