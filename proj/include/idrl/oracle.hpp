#pragma once

#include <vector>

#include "idrl/gridworld.hpp"

namespace idrl {

// Exact solutions live on flattened (s,a) vectors indexed s * n_actions + a.

struct ExactSolution {
  std::vector<double> d;            // optimal visitation
  std::vector<double> w_sa;         // d / dD
  std::vector<double> w_s;          // state marginal ratio
  std::vector<double> w_a_given_s;  // w_sa / w_s on the support
  double objective = 0.0;           // E_d[r] - alpha * D_f(d||dD)
  double expected_reward = 0.0;
  double flow_residual = 0.0;       // max per-state constraint violation
};

// Discounted occupancy of a policy by linear solve; sums to 1.
std::vector<double> exact_visitation(const TabularMDP& mdp,
                                     const std::vector<std::vector<double>>& policy);

std::vector<double> state_marginal(const TabularMDP& mdp, const std::vector<double>& d_sa);

struct RegularizedSolveOptions {
  int restarts = 10;
  int max_iters = 200000;
  double grad_tol = 1e-11;
  int dykstra_iters = 128;
  std::uint64_t seed = 0;
};

// Brute-force maximization of E_d[r] - alpha D_f(d||dD) over the Bellman-flow
// polytope by projected gradient ascent with multi-start. dD must be positive
// on every (s,a) the flow can use; problem sizes are capped at 200 pairs.
ExactSolution exact_regularized_solution(const TabularMDP& mdp,
                                         const std::vector<double>& dD, double alpha,
                                         const RegularizedSolveOptions& opts = {});

struct FixedPointResult {
  std::vector<double> V;
  std::vector<double> Q;      // flattened (s,a)
  std::vector<double> ratio;  // w(a|s) = max(0, (Q-V)/(2 alpha) + 1)
};

// Joint fixed point of the semi-gradient value recursion (alpha-form):
// Q = r + gamma P V; per state, V solves E_mu[max(0,(Q-V)/(2 alpha)+1)] = 1.
FixedPointResult semi_gradient_fixed_point(const TabularMDP& mdp,
                                           const std::vector<std::vector<double>>& mu,
                                           double alpha);

// Repeated regularized solves with the reference replaced by the previous
// optimum restricted to its support; returns E_{d*_k}[r] per round.
std::vector<double> check_monotonicity(const TabularMDP& mdp, std::vector<double> dD0,
                                       double alpha, int iterations,
                                       const RegularizedSolveOptions& opts = {});

struct TabularCorrectionResult {
  std::vector<double> U;
  std::vector<double> W;        // pre-clip
  std::vector<double> w_state;  // max(0, W)
};

// Exact-expectation transcription of the dual OPE objectives on enumerated
// state tables, solved by convex gradient descent on U with W in closed form.
TabularCorrectionResult tabular_correction_solve(const TabularMDP& mdp,
                                                 const std::vector<double>& dD,
                                                 const std::vector<double>& w_action,
                                                 int iters = 200000, double lr = 0.05);

void write_oracle_csv(const TabularMDP& mdp, const ExactSolution& sol,
                      const std::string& path);

}  // namespace idrl
