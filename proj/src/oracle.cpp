#include "idrl/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "idrl/divergence.hpp"
#include "idrl/heads.hpp"

namespace idrl {

std::vector<double> exact_visitation(const TabularMDP& mdp,
                                     const std::vector<std::vector<double>>& policy) {
  mdp.validate();
  const int n = mdp.n_states;
  for (int s = 0; s < n; ++s) {
    double row = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) row += policy[s][a];
    if (std::abs(row - 1.0) > 1e-9)
      throw std::invalid_argument("exact_visitation: policy row does not sum to 1");
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  for (int s2 = 0; s2 < n; ++s2)
    for (int s = 0; s < n; ++s)
      for (int a = 0; a < mdp.n_actions; ++a)
        A(s2, s) -= mdp.gamma * policy[s][a] * mdp.P[s][a][s2];
  Eigen::VectorXd b(n);
  for (int s = 0; s < n; ++s) b(s) = (1.0 - mdp.gamma) * mdp.d0[s];
  Eigen::VectorXd rho = A.partialPivLu().solve(b);

  std::vector<double> d(static_cast<std::size_t>(n) * mdp.n_actions, 0.0);
  double total = 0.0;
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      d[static_cast<std::size_t>(s) * mdp.n_actions + a] =
          std::max(0.0, rho(s)) * policy[s][a];
      total += d[static_cast<std::size_t>(s) * mdp.n_actions + a];
    }
  for (double& x : d) x /= total;
  return d;
}

std::vector<double> state_marginal(const TabularMDP& mdp, const std::vector<double>& d_sa) {
  std::vector<double> m(mdp.n_states, 0.0);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      m[s] += d_sa[static_cast<std::size_t>(s) * mdp.n_actions + a];
  return m;
}

namespace {

struct FlowProblem {
  const TabularMDP* mdp;
  std::vector<int> support;        // flattened (s,a) indices with dD > 0
  std::vector<double> dD_sup;      // dD restricted to the support
  std::vector<double> r_sup;
  Eigen::MatrixXd A;               // n_states x m flow constraint matrix
  Eigen::VectorXd b;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
};

FlowProblem build_flow(const TabularMDP& mdp, const std::vector<double>& dD) {
  FlowProblem fp;
  fp.mdp = &mdp;
  const int na = mdp.n_actions;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < na; ++a) {
      const std::size_t j = static_cast<std::size_t>(s) * na + a;
      if (dD[j] > 0.0) {
        fp.support.push_back(static_cast<int>(j));
        fp.dD_sup.push_back(dD[j]);
        fp.r_sup.push_back(mdp.R[s][a]);
      }
    }
  const int m = static_cast<int>(fp.support.size());
  if (m == 0) throw std::invalid_argument("regularized solve: empty reference support");
  if (m > 200) throw std::invalid_argument("regularized solve: problem capped at 200 pairs");
  fp.A = Eigen::MatrixXd::Zero(mdp.n_states, m);
  for (int j = 0; j < m; ++j) {
    const int s = fp.support[j] / na;
    const int a = fp.support[j] % na;
    fp.A(s, j) += 1.0;
    for (int s2 = 0; s2 < mdp.n_states; ++s2)
      fp.A(s2, j) -= mdp.gamma * mdp.P[s][a][s2];
  }
  fp.b.resize(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) fp.b(s) = (1.0 - mdp.gamma) * mdp.d0[s];
  fp.cod.compute(fp.A);
  return fp;
}

Eigen::VectorXd project_affine(const FlowProblem& fp, const Eigen::VectorXd& x) {
  return x - fp.cod.solve(fp.A * x - fp.b);
}

// Dykstra's alternating projection between the flow-affine set and the
// non-negative orthant.
Eigen::VectorXd project_polytope(const FlowProblem& fp, Eigen::VectorXd x, int iters) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(x.size());
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd y = project_affine(fp, x + p);
    p = x + p - y;
    const Eigen::VectorXd z = (y + q).cwiseMax(0.0);
    q = y + q - z;
    x = z;
  }
  return x;
}

// Exact feasibility polish: zero the (near-)active coordinates and project the
// rest onto the affine set; grow the active set if negatives reappear.
Eigen::VectorXd polish_active_set(const FlowProblem& fp, Eigen::VectorXd x) {
  const int m = static_cast<int>(x.size());
  std::vector<bool> active(m, false);
  for (int j = 0; j < m; ++j) active[j] = x(j) < 1e-9;
  for (int round = 0; round < m + 1; ++round) {
    std::vector<int> free;
    for (int j = 0; j < m; ++j)
      if (!active[j]) free.push_back(j);
    if (free.empty()) break;
    Eigen::MatrixXd Af(fp.A.rows(), free.size());
    for (std::size_t k = 0; k < free.size(); ++k) Af.col(k) = fp.A.col(free[k]);
    Eigen::VectorXd xf(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) xf(k) = x(free[k]);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Af);
    Eigen::VectorXd yf = xf - cod.solve(Af * xf - fp.b);
    bool neg = false;
    for (std::size_t k = 0; k < free.size(); ++k)
      if (yf(k) < -1e-12) {
        active[free[k]] = true;
        neg = true;
      }
    if (!neg) {
      x.setZero();
      for (std::size_t k = 0; k < free.size(); ++k) x(free[k]) = std::max(0.0, yf(k));
      return x;
    }
  }
  return x.cwiseMax(0.0);
}

double flow_objective(const FlowProblem& fp, const Eigen::VectorXd& x, double alpha) {
  double obj = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    const double ratio = x(j) / fp.dD_sup[j];
    obj += x(j) * fp.r_sup[j] - alpha * fp.dD_sup[j] * (ratio - 1.0) * (ratio - 1.0);
  }
  return obj;
}

}  // namespace

ExactSolution exact_regularized_solution(const TabularMDP& mdp,
                                         const std::vector<double>& dD, double alpha,
                                         const RegularizedSolveOptions& opts) {
  mdp.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("regularized solve: alpha must be > 0");
  FlowProblem fp = build_flow(mdp, dD);
  const int m = static_cast<int>(fp.support.size());
  const int na = mdp.n_actions;

  double min_dd = 1e300;
  for (double v : fp.dD_sup) min_dd = std::min(min_dd, v);
  const double step = min_dd / (2.0 * alpha);

  std::mt19937_64 rng(opts.seed ^ 0x853c49e6748fea9bull);
  std::exponential_distribution<double> expo(1.0);

  auto run_from = [&](Eigen::VectorXd x) {
    x = project_polytope(fp, std::move(x), opts.dykstra_iters);
    for (int it = 0; it < opts.max_iters; ++it) {
      Eigen::VectorXd g(m);
      for (int j = 0; j < m; ++j)
        g(j) = fp.r_sup[j] - 2.0 * alpha * (x(j) / fp.dD_sup[j] - 1.0);
      Eigen::VectorXd xn = project_polytope(fp, x + step * g, opts.dykstra_iters);
      const double move = (xn - x).norm();
      x = std::move(xn);
      if (move < opts.grad_tol) break;
    }
    return x;
  };

  Eigen::VectorXd best;
  double best_obj = -1e300;
  for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
    Eigen::VectorXd x0(m);
    if (restart == 0) {
      for (int j = 0; j < m; ++j) x0(j) = fp.dD_sup[j];
    } else {
      // feasible-ish start: occupancy of a random policy restricted to support
      std::vector<std::vector<double>> pol(mdp.n_states,
                                           std::vector<double>(na, 1.0 / na));
      for (int s = 0; s < mdp.n_states; ++s) {
        std::vector<double> mass(na, 0.0);
        double tot = 0.0;
        for (int a = 0; a < na; ++a)
          if (dD[static_cast<std::size_t>(s) * na + a] > 0.0) {
            mass[a] = expo(rng);
            tot += mass[a];
          }
        if (tot > 0.0)
          for (int a = 0; a < na; ++a) pol[s][a] = mass[a] / tot;
      }
      const std::vector<double> dv = exact_visitation(mdp, pol);
      for (int j = 0; j < m; ++j) x0(j) = dv[fp.support[j]];
    }
    Eigen::VectorXd x = run_from(std::move(x0));
    const double obj = flow_objective(fp, x, alpha);
    if (obj > best_obj) {
      best_obj = obj;
      best = x;
    }
  }

  best = polish_active_set(fp, project_polytope(fp, best, 4 * opts.dykstra_iters));

  ExactSolution sol;
  sol.flow_residual = (fp.A * best - fp.b).cwiseAbs().maxCoeff();
  if (sol.flow_residual > 1e-8)
    throw std::runtime_error("regularized solve: flow residual " +
                             std::to_string(sol.flow_residual) + " after budget");
  sol.objective = flow_objective(fp, best, alpha);
  sol.d.assign(dD.size(), 0.0);
  sol.w_sa.assign(dD.size(), 0.0);
  for (int j = 0; j < m; ++j) {
    sol.d[fp.support[j]] = best(j);
    sol.w_sa[fp.support[j]] = best(j) / fp.dD_sup[j];
    sol.expected_reward += best(j) * fp.r_sup[j];
  }
  const std::vector<double> ds = state_marginal(mdp, sol.d);
  const std::vector<double> dDs = state_marginal(mdp, dD);
  sol.w_s.assign(mdp.n_states, 0.0);
  sol.w_a_given_s.assign(dD.size(), 0.0);
  for (int s = 0; s < mdp.n_states; ++s)
    if (dDs[s] > 0.0) sol.w_s[s] = ds[s] / dDs[s];
  for (int j = 0; j < m; ++j) {
    const int s = fp.support[j] / na;
    if (sol.w_s[s] > 1e-12) sol.w_a_given_s[fp.support[j]] = sol.w_sa[fp.support[j]] / sol.w_s[s];
  }
  return sol;
}

FixedPointResult semi_gradient_fixed_point(const TabularMDP& mdp,
                                           const std::vector<std::vector<double>>& mu,
                                           double alpha) {
  mdp.validate();
  const int n = mdp.n_states, na = mdp.n_actions;
  FixedPointResult res;
  res.V.assign(n, 0.0);
  res.Q.assign(static_cast<std::size_t>(n) * na, 0.0);

  auto ratio_mean = [&](int s, double v) {
    double g = 0.0;
    for (int a = 0; a < na; ++a) {
      if (mu[s][a] <= 0.0) continue;
      g += mu[s][a] *
           std::max(0.0, (res.Q[static_cast<std::size_t>(s) * na + a] - v) / (2.0 * alpha) + 1.0);
    }
    return g;
  };

  for (int sweep = 0; sweep < 100000; ++sweep) {
    for (int s = 0; s < n; ++s)
      for (int a = 0; a < na; ++a) {
        double q = mdp.R[s][a];
        for (int s2 = 0; s2 < n; ++s2)
          if (mdp.P[s][a][s2] > 0.0) q += mdp.gamma * mdp.P[s][a][s2] * res.V[s2];
        res.Q[static_cast<std::size_t>(s) * na + a] = q;
      }
    double delta = 0.0;
    for (int s = 0; s < n; ++s) {
      double mu_mass = 0.0;
      for (int a = 0; a < na; ++a) mu_mass += mu[s][a];
      if (mu_mass <= 0.0)
        throw std::invalid_argument("semi_gradient_fixed_point: empty behavior row");
      double qlo = 1e300, qhi = -1e300;
      for (int a = 0; a < na; ++a)
        if (mu[s][a] > 0.0) {
          qlo = std::min(qlo, res.Q[static_cast<std::size_t>(s) * na + a]);
          qhi = std::max(qhi, res.Q[static_cast<std::size_t>(s) * na + a]);
        }
      double lo = qlo - 4.0 * alpha, hi = qhi + 2.0 * alpha;
      int guard = 0;
      while (ratio_mean(s, lo) < 1.0) {
        lo -= 4.0 * alpha;
        if (++guard > 200)
          throw std::runtime_error("semi_gradient_fixed_point: bisection bracket failure");
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ratio_mean(s, mid) >= 1.0)
          lo = mid;
        else
          hi = mid;
      }
      const double v = 0.5 * (lo + hi);
      delta = std::max(delta, std::abs(v - res.V[s]));
      res.V[s] = v;
    }
    if (delta < 1e-13) break;
  }

  res.ratio.assign(static_cast<std::size_t>(n) * na, 0.0);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < na; ++a)
      res.ratio[static_cast<std::size_t>(s) * na + a] = std::max(
          0.0, (res.Q[static_cast<std::size_t>(s) * na + a] - res.V[s]) / (2.0 * alpha) + 1.0);
  return res;
}

std::vector<double> check_monotonicity(const TabularMDP& mdp, std::vector<double> dD0,
                                       double alpha, int iterations,
                                       const RegularizedSolveOptions& opts) {
  std::vector<double> values;
  std::vector<double> ref = std::move(dD0);
  for (int k = 0; k < iterations; ++k) {
    const ExactSolution sol = exact_regularized_solution(mdp, ref, alpha, opts);
    values.push_back(sol.expected_reward);
    ref = sol.d;
    double total = 0.0;
    for (double& x : ref) {
      if (x < 1e-12) x = 0.0;  // restrict to support
      total += x;
    }
    if (total <= 0.0) break;
    for (double& x : ref) x /= total;
  }
  return values;
}

TabularCorrectionResult tabular_correction_solve(const TabularMDP& mdp,
                                                 const std::vector<double>& dD,
                                                 const std::vector<double>& w_action,
                                                 int iters, double lr) {
  mdp.validate();
  const int n = mdp.n_states, na = mdp.n_actions;
  struct Edge {
    int s, s2;
    double p;       // P(s2|s,a)
    double mass;    // dD(s,a)
    double wmass;   // dD(s,a) * w(a|s)
  };
  std::vector<Edge> edges;
  std::vector<double> dDs = state_marginal(mdp, dD);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < na; ++a) {
      const double mass = dD[static_cast<std::size_t>(s) * na + a];
      if (mass <= 0.0) continue;
      const double w = w_action[static_cast<std::size_t>(s) * na + a];
      for (int s2 = 0; s2 < n; ++s2)
        if (mdp.P[s][a][s2] > 0.0)
          edges.push_back({s, s2, mdp.P[s][a][s2], mass, mass * w});
    }

  std::vector<double> U(n, 0.0);
  AdamOptimizer opt(U.size(), lr);
  std::vector<double> ms(n), grad(n);
  for (int it = 0; it < iters; ++it) {
    std::fill(ms.begin(), ms.end(), 0.0);
    for (const Edge& e : edges)
      ms[e.s] += e.wmass * (mdp.gamma * e.p * U[e.s2] - e.p * U[e.s]);
    // ms currently holds dD_s * E_mu[w (TU - U)]; the conjugate argument needs
    // the conditional expectation, so divide by the state mass.
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const Edge& e : edges) {
      const double c = std::max(0.0, (ms[e.s] / dDs[e.s]) / 2.0 + 1.0);
      grad[e.s] += e.mass * e.p - c * e.wmass * e.p;
      grad[e.s2] += mdp.gamma * e.p * (c * e.wmass - e.mass);
    }
    opt.step(U, grad);
  }

  TabularCorrectionResult res;
  res.U = U;
  res.W.assign(n, 0.0);
  res.w_state.assign(n, 0.0);
  std::fill(ms.begin(), ms.end(), 0.0);
  for (const Edge& e : edges)
    ms[e.s] += e.wmass * (mdp.gamma * e.p * U[e.s2] - e.p * U[e.s]);
  for (int s = 0; s < n; ++s) {
    if (dDs[s] <= 0.0) continue;
    res.W[s] = (ms[s] / dDs[s]) / 2.0 + 1.0;  // (f')^{-1} of the conditional mean
    res.w_state[s] = std::max(0.0, res.W[s]);
  }
  return res;
}

void write_oracle_csv(const TabularMDP& mdp, const ExactSolution& sol,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.precision(17);
  f << "state,action,d,w_sa,w_s,w_a_given_s\n";
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const std::size_t j = static_cast<std::size_t>(s) * mdp.n_actions + a;
      f << s << "," << a << "," << sol.d[j] << "," << sol.w_sa[j] << "," << sol.w_s[s]
        << "," << sol.w_a_given_s[j] << "\n";
    }
}

}  // namespace idrl
