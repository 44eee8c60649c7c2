#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "smd/problems.hpp"

namespace smd {

/// Tabular discounted MDP. P has one row per (s, a) pair, row s * A + a,
/// holding the next-state distribution; R is S x A with entries in [0, 1].
/// p0 is the distribution the objective is measured under, mu the
/// exploration distribution the gradients use.
struct TabularDMDP {
  Index S = 0;
  Index A = 0;
  Matrix P;
  Matrix R;
  double gamma = 0.9;
  Vector p0;
  Vector mu;
  std::string name = "mdp";

  void validate() const;
};

/// S x A, row-stochastic.
using Policy = Matrix;

Policy uniform_policy(const TabularDMDP& mdp);
void validate_policy(const TabularDMDP& mdp, const Policy& pi, bool strictly_positive = false);

/// v solving (I - gamma P_pi) v = r_pi (reward sign).
Vector state_values(const TabularDMDP& mdp, const Policy& pi);
/// Q(s, a) = R(s, a) + gamma <P(s, a, .), v>.
Matrix q_values(const TabularDMDP& mdp, const Policy& pi);
/// Normalised discounted state occupancy d_dist(s) = (1 - gamma) sum_h gamma^h Pr(s_h = s).
Vector occupancy(const TabularDMDP& mdp, const Policy& pi, const Vector& dist);

/// Expected discounted reward <dist, v> (the maximisation value V+).
double exact_value(const TabularDMDP& mdp, const Policy& pi, const Vector& dist);
/// Minimisation objective V = -V+.
double objective(const TabularDMDP& mdp, const Policy& pi, const Vector& dist);

/// Gradient of the minimisation objective under mu:
/// -d_mu(s) Q(s, a) / (1 - gamma).
Matrix exact_policy_gradient(const TabularDMDP& mdp, const Policy& pi, const Vector& mu);

struct SampledGradient {
  Matrix grad;
  /// Per-episode variance of the estimator in the Frobenius and (2,inf) norms.
  double var_frobenius = 0.0;
  double var_2inf = 0.0;
  int horizon = 0;
  int batch = 0;
};

/// Default truncation horizon ceil(log(1e-3 (1 - gamma)) / log gamma).
int default_horizon(double gamma);

/// Monte-Carlo estimate from `batch` episodes of length `horizon` started at
/// s0 ~ mu. Each visit (s_h, a_h) contributes gamma^h G_h / pi(s_h, a_h) to
/// entry (s_h, a_h), G_h the truncated return from h; the truncation bias is
/// of order gamma^H / (1 - gamma)^2. Episode i draws from its own stream.
SampledGradient sampled_policy_gradient(const TabularDMDP& mdp, const Policy& pi, const Vector& mu, int horizon,
                                        int batch, std::uint64_t seed);

/// Projected step: rows of pi - eta g projected onto the simplex.
Policy pspg_step(const Policy& pi, const Matrix& grad, double eta);
/// Multiplicative step: row-wise pi * exp(-eta g), renormalised.
Policy smpg_step(const Policy& pi, const Matrix& grad, double eta);

struct SmoothnessConstants {
  double L_F = 0.0;
  double L_21 = 0.0;
};

/// L_F = 2 gamma |A| / (1 - gamma)^3 and L_21 = 2 gamma / (1 - gamma)^3.
SmoothnessConstants smoothness_constants(const TabularDMDP& mdp);

struct OptimalSolution {
  Vector v;
  Policy pi;
  int iterations = 0;
};

/// Value iteration to tol, then policy iteration until the greedy policy is
/// stable. Greedy ties go to the lowest action index.
OptimalSolution value_iteration(const TabularDMDP& mdp, double tol = 1e-12);

struct DominationReport {
  double gap = 0.0;       ///< V_p(pi) - V_p*
  double fw_gap = 0.0;    ///< max_pi' <grad V_mu(pi), pi - pi'>
  double C = 0.0;         ///< |d_p(pi*) / mu|_inf / (1 - gamma)
  double rhs = 0.0;       ///< C * fw_gap
  bool holds = true;
};

DominationReport grad_domination_check(const TabularDMDP& mdp, const Policy& pi, const OptimalSolution& opt,
                                       double slack = 1e-9);
DominationReport grad_domination_check(const TabularDMDP& mdp, const Policy& pi);

/// The policy problem as a composite instance on the product simplex
/// (row-major vectorisation s * A + a): F = V_mu, with smoothness
/// certificates L_F (Euclidean) and L_21 (product entropy).
CompositeInstance make_policy_instance(const TabularDMDP& mdp);

/// Garnet-style random MDP: each (s, a) reaches `branching` distinct states
/// with random probabilities; rewards uniform in [0, 1]; p0 = mu = uniform.
TabularDMDP make_garnet(Index S, Index A, Index branching, std::uint64_t seed, double gamma = 0.6);

/// Four 2 x 2 rooms on a 5 x 5 interior with one doorway per inner wall
/// segment (20 cells). Actions up/right/down/left move with probability
/// 1 - slip and slip to a uniformly random direction otherwise; walls block.
/// Reward 1 for any action taken in the bottom-right goal cell, which is
/// absorbing. p0 = mu = uniform.
TabularDMDP make_gridworld(double gamma = 0.6, double slip = 0.1);

/// Parses "gridworld" or "garnet:S,A,b,seed".
TabularDMDP make_mdp(const std::string& spec, double gamma);

enum class PolicyAlgo { PSPG, SMPG };
std::string policy_algo_name(PolicyAlgo algo);
PolicyAlgo parse_policy_algo(const std::string& name);

struct PolicyRunConfig {
  long T = 1000;
  /// Step size; NaN means 1 / (2 L) in the algorithm's geometry.
  double eta = std::numeric_limits<double>::quiet_NaN();
  /// 0 means exact gradients.
  int batch = 0;
  /// 0 means default_horizon(gamma).
  int horizon = 0;
  std::uint64_t seed = 0;
  /// Record every `stride` steps (0 means ceil(T/100)); the last step is always recorded.
  long stride = 0;
  /// BFBE in the algorithm's geometry at recorded steps, rho = 3 L.
  bool bfbe = true;
  /// Stop once V_p - V_p* <= target (NaN never stops).
  double target = std::numeric_limits<double>::quiet_NaN();
};

struct PolicyRow {
  long t = 0;
  double value = 0.0;  ///< V_p (minimisation sign)
  double gap = 0.0;
  double bfbe = std::numeric_limits<double>::quiet_NaN();
  double var_frobenius = std::numeric_limits<double>::quiet_NaN();
  double var_2inf = std::numeric_limits<double>::quiet_NaN();
};

struct PolicyRunResult {
  std::vector<PolicyRow> rows;
  Policy final_policy;
  double eta = 0.0;
  double v_star = 0.0;
  /// First t with V_p(pi_t) - V_p* <= target, or -1.
  long hit = -1;
  double min_entry = 0.0;
};

PolicyRunResult run_policy_optimization(const TabularDMDP& mdp, PolicyAlgo algo, const PolicyRunConfig& config);

}  // namespace smd
