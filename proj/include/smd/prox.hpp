#pragma once

#include "smd/dgf.hpp"
#include "smd/kernels.hpp"
#include "smd/problems.hpp"
#include "smd/types.hpp"

namespace smd {

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 100000;
};

struct SubproblemSolution {
  Vector point;
  /// Value of the solved model at `point`.
  double objective_value = 0.0;
  /// First-order optimality residual.
  double residual = 0.0;
  int iterations = 0;
};

/// argmin_{y in X} eta (<g, y> + r(y)) + D(y, x).
///
/// Closed forms: Euclidean with any built-in regulariser on a box, simplex or
/// all space; entropy on (product) simplices, boxes and all space with r zero
/// or l1; PolyNorm on all space with r zero or l1. Everything else goes
/// through a Euclidean proximal-gradient loop on the strongly convex model.
SubproblemSolution mirror_step(const Vector& x, const Vector& g, double eta, const CompositeInstance& instance,
                               const DistanceGenerator& dgf, const SolverOptions& options = {});

/// x+ = argmin_y <grad F(x), y> + r(y) + rho D(y, x); objective_value is
/// Q_rho(x, x+) = <grad F(x), x+ - x> + rho D(x+, x) + r(x+) - r(x) <= 0.
SubproblemSolution linearized_min(const Vector& x, double rho, const CompositeInstance& instance,
                                  const DistanceGenerator& dgf, const SolverOptions& options = {});

/// x^ = argmin_y Phi(y) + rho D(y, x); objective_value is the envelope
/// Phi_{1/rho}(x). Requires rho above the weak-convexity modulus m of the
/// smoothness certificate (m = ell unless a smaller lower constant is
/// declared); DomainError otherwise. Solved by majorise-minimise: each step
/// replaces F by its relative-smoothness upper model at the current point,
/// which contracts at rate (ell + m) / (rho + ell).
SubproblemSolution phi_prox(const Vector& x, double rho, const CompositeInstance& instance,
                            const DistanceGenerator& dgf, const SolverOptions& options = {});

/// Mirror step for omega = |x|^(p+2)/(p+2) + |x|^2/2 with r = 0, X = R^d:
/// c = (1 + |x|^p) x - eta g, theta^(p+1) + theta = |c|, x+ = c / (1 + theta^p).
Vector polynorm_step(const Vector& x, const Vector& g, double eta, double p);

/// Entropic step on a vector (rows = 1) or on a row-major stack of `rows`
/// simplices: each block x * exp(-eta g), normalised.
Vector entropy_step(const Vector& x, const Vector& g, double eta, Index rows = 1);

}  // namespace smd
