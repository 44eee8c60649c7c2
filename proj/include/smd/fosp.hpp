#pragma once

#include <cstdint>

#include "smd/prox.hpp"

namespace smd {

/// Bregman proximal mapping measure rho^2 Dsym(x^, x).
double bpm(const Vector& x, double rho, const CompositeInstance& instance, const DistanceGenerator& dgf,
           const SolverOptions& options = {});
/// Bregman gradient mapping measure rho^2 Dsym(x+, x).
double bgm(const Vector& x, double rho, const CompositeInstance& instance, const DistanceGenerator& dgf,
           const SolverOptions& options = {});
/// Bregman forward-backward envelope gap -2 rho min_y Q_rho(x, y).
double bfbe(const Vector& x, double rho, const CompositeInstance& instance, const DistanceGenerator& dgf,
            const SolverOptions& options = {});

struct StationarityReport {
  double rho = 0.0;
  double bpm = 0.0;
  double bgm = 0.0;
  double bfbe = 0.0;
  double bpm_residual = 0.0;
  double bgm_residual = 0.0;
  double bfbe_residual = 0.0;
  Vector prox_point;
  Vector gradient_point;
};

/// All three measures at one point (the BGM and BFBE share one solve).
StationarityReport stationarity(const Vector& x, double rho, const CompositeInstance& instance,
                                const DistanceGenerator& dgf, const SolverOptions& options = {});

/// C(ell, rho, s) = ((1+s)(rho-ell) + (1+1/s) ell) / (rho - ell - (1+1/s) ell).
/// DomainError unless s > 0 and rho > ell/s + 2 ell.
double sandwich_constant(double ell, double rho, double s);

struct SandwichReport {
  int samples = 0;
  int violations = 0;
  double constant = 0.0;
  /// Largest amount by which either inequality fails (<= 0 when all hold).
  double max_violation = -1.0;
  double min_ratio = 0.0;  // min Delta+ / Delta
  double max_ratio = 0.0;  // max Delta+ / Delta
};

/// (1/C) Delta_rho <= Delta+_rho <= C Delta_rho at `samples` random feasible
/// points. Euclidean geometry only, where sqrt(Dsym) is a metric.
SandwichReport verify_lemma1(const CompositeInstance& instance, const DistanceGenerator& dgf, int samples,
                             double ell, double rho, double s, std::uint64_t seed, double slack = 1e-7);

struct DominanceReport {
  int samples = 0;
  int violations = 0;
  double max_violation = -1.0;
  /// min over samples of 2 D_{rho/2} / Delta+_rho (inf when Delta+ = 0 everywhere).
  double min_ratio = 0.0;
};

/// 2 D_{rho/2}(x) >= Delta+_rho(x) at `samples` random feasible points.
DominanceReport verify_lemma2(const CompositeInstance& instance, const DistanceGenerator& dgf, int samples,
                              double rho, std::uint64_t seed, double slack = 1e-7);

/// Closed forms on F = x^2/2, r = |x|, X = [0, 1] with x in (0, 1]:
/// D_rho(x) = 2 rho |x| + 2 rho (1 - rho/2) x^2 for rho in [1, 2], and
/// Delta+_rho(x) = rho^2 x^2 (x+ = 0) for rho in [1, 2].
double gap_instance_bfbe(double x, double rho);
double gap_instance_bgm(double x, double rho);

/// rho^2 Dsym(x^, x+), bounded by ell/(rho-ell) (Delta + Delta+).
double prox_gradient_distance(const Vector& x, double rho, const CompositeInstance& instance,
                              const DistanceGenerator& dgf, const SolverOptions& options = {});

/// max_{y in X} <grad F(x), x - y> on a bounded box or simplex.
double frank_wolfe_gap(const Vector& x, const CompositeInstance& instance);

/// |x - prox_{r + X}(x - grad F(x))|_2, zero exactly at stationary points.
double stationarity_residual(const Vector& x, const CompositeInstance& instance);

}  // namespace smd
