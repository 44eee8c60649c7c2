#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "smd/fosp.hpp"
#include "smd/problems.hpp"
#include "smd/prox.hpp"

namespace smd {

/// eta = min{1/(2 ell), sqrt(lambda0 / (sigma2 ell T))}.
double theorem1_step(double ell, double lambda0, double sigma2, long T);

/// 1/d while t < ceil(T/2) and T <= 2d/a; otherwise
/// 1 / (a (2d/a + max(t - ceil(T/2), 0))).
double stich_schedule(double a, double d, long T, long t);

/// stich_schedule with a = mu eps^((2-alpha)/alpha) / 3 and d = 2 ell.
double theorem3_schedule(double mu, double eps, double alpha, double ell, long T, long t);

class Schedule {
 public:
  enum class Kind { Constant, Theorem1, SquareSummable, Stich, Theorem3 };

  static Schedule constant(double eta);
  static Schedule theorem1(double ell, double lambda0, double sigma2, long T);
  /// eta0 / (t + 1)^q, q in (0.5, 1].
  static Schedule square_summable(double eta0, double q);
  static Schedule stich(double a, double d, long T);
  static Schedule theorem3(double mu, double eps, double alpha, double ell, long T);

  Kind kind() const { return kind_; }
  double eta(long t) const;
  /// Throws DomainError if eta_0 > 1/(2 ell).
  void check_initial_step(double ell) const;
  std::string describe() const;
  const std::vector<double>& params() const { return params_; }

 private:
  Schedule(Kind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}
  Kind kind_;
  std::vector<double> params_;
};

std::string schedule_kind_name(Schedule::Kind kind);

struct Checkpoint {
  long t = 0;
  double eta = 0.0;
  double phi = 0.0;
  double bfbe = std::numeric_limits<double>::quiet_NaN();
  double lyapunov = std::numeric_limits<double>::quiet_NaN();
  double phi_plus = std::numeric_limits<double>::quiet_NaN();
};

struct RunConfig {
  /// Checkpoint stride; 0 means ceil(T/100).
  long stride = 0;
  /// BFBE at checkpoints (needs a smoothness certificate unless bfbe_rho is set).
  bool bfbe = true;
  /// BFBE parameter at checkpoints and for per-step tracking; NaN means 3 ell.
  double bfbe_rho = std::numeric_limits<double>::quiet_NaN();
  /// Compute the BFBE at every iterate (weighted average and minimum).
  bool track_every_step = false;
  /// Lyapunov value with envelope parameter lyapunov_rho (NaN means 2 ell).
  bool lyapunov = false;
  double lyapunov_rho = std::numeric_limits<double>::quiet_NaN();
  /// Phi at the gradient-mapping point x+ (rho = ell) at checkpoints.
  bool phi_plus = false;
  /// Keep thinned iterates at checkpoints.
  bool store_iterates = true;
  /// Diverged when Phi > factor * max(1, Phi(x0)) or an iterate is not finite.
  double divergence_factor = 1e6;
  /// Reject schedules with eta_0 > 1/(2 ell) when the instance declares ell
  /// for this geometry. Step-size sweeps turn this off.
  bool enforce_step_cap = true;
  /// Optional map applied to each stochastic gradient (e.g. clipping).
  std::function<Vector(const Vector&)> gradient_transform;
  /// Starting point; empty means the instance default.
  Vector x0;
  SolverOptions solver;
};

struct RunRecord {
  std::uint64_t seed = 0;
  long T = 0;
  std::vector<double> etas;
  std::vector<Checkpoint> checkpoints;
  std::vector<long> iterate_index;
  std::vector<Vector> iterates;
  long selected_index = -1;
  Vector selected_iterate;
  Vector final_iterate;
  bool diverged = false;
  long diverged_at = -1;
  std::string status = "ok";
  double wall_seconds = 0.0;
  /// Per-step tracking (track_every_step): sum eta_t D(x_t) / sum eta_t and min_t D(x_t), t < T.
  double weighted_bfbe = std::numeric_limits<double>::quiet_NaN();
  double min_bfbe = std::numeric_limits<double>::quiet_NaN();
  double sum_eta = 0.0;
  double sum_eta2 = 0.0;
  double final_phi = std::numeric_limits<double>::quiet_NaN();
};

/// T steps of x_{t+1} = mirror_step(x_t, stoch_grad(x_t), eta_t). Diagnostics
/// use exact gradients. Runs are a pure function of their arguments: the
/// oracle's own seed drives the noise, `seed` drives iterate selection.
RunRecord run_smd(const CompositeInstance& instance, const DistanceGenerator& dgf, StochasticOracle& oracle,
                  const Schedule& schedule, long T, std::uint64_t seed, const RunConfig& config = {});

/// Same, with the oracle built from (instance, noise, seed).
RunRecord run_smd(const CompositeInstance& instance, const DistanceGenerator& dgf, const NoiseModel& noise,
                  const Schedule& schedule, long T, std::uint64_t seed, const RunConfig& config = {});

/// Index drawn with probability eta_t / sum eta.
long select_index(const std::vector<double>& etas, Rng& rng);

/// The iterate x_bar_T drawn with probabilities eta_t / sum eta.
const Vector& select_iterate(const RunRecord& record);

/// Phi* from the instance, or a multistart estimate when absent.
double resolve_phi_star(const CompositeInstance& instance);

/// eta_prev rho (Phi(x) - Phi*) + Phi_{1/rho}(x) - Phi*. Needs a known Phi*.
double lyapunov_value(const Vector& x, double eta_prev, double rho, const CompositeInstance& instance,
                      const DistanceGenerator& dgf);

/// lambda0 = Phi_{1/rho}(x0) - Phi* + Phi(x0) - Phi* with rho = 2 ell.
double theorem1_lambda0(const CompositeInstance& instance, const DistanceGenerator& dgf, const Vector& x0);

/// Type-7 empirical quantile.
double empirical_quantile(std::vector<double> values, double q);

struct ReplicaConfig {
  int replicas = 20;
  double beta = 0.1;
  /// Measure D_{rho_mult * ell}.
  double rho_mult = 5.0;
  int threads = 1;
  std::uint64_t seed = 0;
  RunConfig run;
};

struct ReplicaSummary {
  std::vector<double> weighted_bfbe;
  double quantile = 0.0;
  double bound = 0.0;
  double lambda_tilde0 = 0.0;
  double sigma2 = 0.0;
  double sum_eta = 0.0;
  double sum_eta2 = 0.0;
  bool within_bound = false;
};

/// Per replica the eta-weighted average of D_{rho_mult ell}(x_t); reports the
/// empirical (1 - beta) quantile next to
/// (5 l0 + 60 sigma^2 ell sum eta^2) / (2 sum eta),
/// l0 = 3 (Phi(x0) - Phi*) + 8 eta_0 sigma^2 log(1/beta), with sigma^2 the
/// sub-Gaussian constant of the oracle in the dual norm.
ReplicaSummary replica_experiment(const CompositeInstance& instance, const DistanceGenerator& dgf,
                                  const NoiseModel& noise, const Schedule& schedule, long T,
                                  const ReplicaConfig& config);

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results are placed
/// by index so the output order never depends on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace smd
