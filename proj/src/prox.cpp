#include "smd/prox.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace smd {

namespace {

bool l1_or_zero(const Regularizer& reg) {
  return reg.kind() == Regularizer::Kind::Zero || reg.kind() == Regularizer::Kind::L1;
}

bool is_entropy(DgfKind kind) { return kind == DgfKind::SimplexEntropy || kind == DgfKind::ProductSimplexEntropy; }

bool simplex_like(const FeasibleSet& set) {
  return set.kind() == FeasibleSet::Kind::Simplex || set.kind() == FeasibleSet::Kind::ProductSimplex;
}

Index block_rows(const FeasibleSet& set) {
  return set.kind() == FeasibleSet::Kind::ProductSimplex ? set.rows() : 1;
}

// Euclidean gradient mapping of m(y) = omega(y) - <theta, y> + tau r(y) on X
// at unit step; zero exactly at the minimiser.
double model_residual(const Vector& y, const Vector& theta, double tau, const CompositeInstance& instance,
                      const DistanceGenerator& dgf) {
  if (!dgf.in_zone(y)) return 0.0;
  const Vector grad = omega_grad(dgf, y) - theta;
  const Vector z = euclidean_prox(instance, y - grad, tau);
  return (z - y).norm();
}

// Proximal gradient with backtracking on m(y) = omega(y) - <theta, y> + tau r(y)
// over X, for combinations without a closed form.
Vector dual_step_iterative(const Vector& theta, double tau, const Vector& warm, const CompositeInstance& instance,
                           const DistanceGenerator& dgf, const SolverOptions& options, int& iterations,
                           double& residual) {
  auto smooth = [&](const Vector& y) { return omega_value(dgf, y) - theta.dot(y); };
  Vector y = warm;
  if (!dgf.in_zone(y) || !instance.feasible.contains(y)) {
    throw DomainError("iterative mirror step needs a warm start in the zone and the feasible set");
  }
  double step = 1.0;
  residual = std::numeric_limits<double>::infinity();
  for (iterations = 1; iterations <= options.max_iter; ++iterations) {
    const Vector grad = omega_grad(dgf, y) - theta;
    const double hy = smooth(y);
    Vector z;
    int shrinks = 0;
    for (;; ++shrinks) {
      if (shrinks > 200) throw SolverError("mirror-step backtracking failed", residual);
      z = euclidean_prox(instance, y - step * grad, step * tau);
      if (dgf.in_zone(z)) {
        const Vector dz = z - y;
        if (smooth(z) <= hy + grad.dot(dz) + dz.squaredNorm() / (2.0 * step) + 1e-15 * (1.0 + std::abs(hy))) break;
      }
      step *= 0.5;
    }
    residual = (z - y).norm() / step;
    y = std::move(z);
    if (residual <= options.tol) return y;
    step *= 1.5;
  }
  throw SolverError("mirror step did not converge", residual);
}

// argmin_{y in X} tau r(y) + omega(y) - <theta, y>. `warm` must be a valid
// interior point; it seeds the iterative path.
Vector dual_step(const Vector& theta, double tau, const Vector& warm, const CompositeInstance& instance,
                 const DistanceGenerator& dgf, const SolverOptions& options, int& iterations, double& residual) {
  const FeasibleSet& set = instance.feasible;
  const Regularizer& reg = instance.reg;
  iterations = 0;
  residual = 0.0;
  switch (dgf.kind()) {
    case DgfKind::Euclidean:
      return euclidean_prox(instance, theta, tau);
    case DgfKind::SimplexEntropy:
    case DgfKind::ProductSimplexEntropy:
      if (!l1_or_zero(reg)) break;
      if (simplex_like(set)) {
        // The l1 term is constant on simplices.
        const Index rows = block_rows(set);
        Vector y(theta.size());
        Eigen::Map<const RowMajorMatrix> t(theta.data(), rows, theta.size() / rows);
        Eigen::Map<RowMajorMatrix> out(y.data(), rows, theta.size() / rows);
        out = softmax_rows(t);
        return y;
      }
      {
        const double w = reg.kind() == Regularizer::Kind::L1 ? reg.weight() : 0.0;
        Vector y = (theta.array() - 1.0 - tau * w).exp().matrix();
        if (set.kind() == FeasibleSet::Kind::Box) {
          for (Index i = 0; i < y.size(); ++i) {
            const double lo = std::max(set.lo()[i], kEntropyFloor);
            if (set.hi()[i] < lo) throw DomainError("box has no strictly positive points");
            y[i] = std::clamp(y[i], lo, set.hi()[i]);
          }
        } else {
          y = y.cwiseMax(kEntropyFloor);
        }
        return y;
      }
    case DgfKind::PolyNorm:
      if (set.kind() == FeasibleSet::Kind::AllSpace && l1_or_zero(reg)) {
        const double w = reg.kind() == Regularizer::Kind::L1 ? reg.weight() : 0.0;
        const Vector u = w > 0.0 ? soft_threshold(theta, tau * w) : theta;
        const double p = dgf.growth_exponent();
        const double t = growth_root(u.norm(), p);
        return u / (1.0 + std::pow(t, p));
      }
      break;
    case DgfKind::Other:
      break;
  }
  return dual_step_iterative(theta, tau, warm, instance, dgf, options, iterations, residual);
}

void check_point(const Vector& x, const CompositeInstance& instance, const DistanceGenerator& dgf) {
  if (x.size() != instance.dim) throw DomainError("point has wrong dimension");
  if (!dgf.in_zone(x)) throw DomainError("point outside the zone of " + dgf.name());
}

}  // namespace

Vector polynorm_step(const Vector& x, const Vector& g, double eta, double p) {
  const Vector c = (1.0 + std::pow(x.norm(), p)) * x - eta * g;
  const double theta = growth_root(c.norm(), p);
  return c / (1.0 + std::pow(theta, p));
}

Vector entropy_step(const Vector& x, const Vector& g, double eta, Index rows) {
  if (rows < 1 || x.size() % rows != 0 || g.size() != x.size()) {
    throw std::invalid_argument("entropy_step: shape mismatch");
  }
  const Index cols = x.size() / rows;
  Vector out(x.size());
  Eigen::Map<const RowMajorMatrix> xm(x.data(), rows, cols);
  Eigen::Map<const RowMajorMatrix> gm(g.data(), rows, cols);
  Eigen::Map<RowMajorMatrix> om(out.data(), rows, cols);
  om = entropy_step_rows(xm, gm, eta);
  return out;
}

SubproblemSolution mirror_step(const Vector& x, const Vector& g, double eta, const CompositeInstance& instance,
                               const DistanceGenerator& dgf, const SolverOptions& options) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("mirror_step needs a finite eta > 0");
  check_point(x, instance, dgf);
  if (g.size() != x.size()) throw std::invalid_argument("mirror_step: gradient dimension mismatch");

  SubproblemSolution sol;
  const Vector theta = omega_grad(dgf, x) - eta * g;
  if (is_entropy(dgf.kind()) && simplex_like(instance.feasible) && l1_or_zero(instance.reg)) {
    sol.point = entropy_step(x, g, eta, block_rows(instance.feasible));
  } else if (dgf.kind() == DgfKind::Euclidean) {
    sol.point = euclidean_prox(instance, x - eta * g, eta);
  } else if (dgf.kind() == DgfKind::PolyNorm && instance.feasible.kind() == FeasibleSet::Kind::AllSpace &&
             instance.reg.kind() == Regularizer::Kind::Zero) {
    sol.point = polynorm_step(x, g, eta, dgf.growth_exponent());
  } else {
    sol.point = dual_step(theta, eta, x, instance, dgf, options, sol.iterations, sol.residual);
  }
  if (!sol.point.allFinite()) {
    // Overflow (huge steps); the caller decides what a non-finite iterate means.
    sol.residual = std::numeric_limits<double>::infinity();
    sol.objective_value = std::numeric_limits<double>::quiet_NaN();
    return sol;
  }
  if (sol.iterations == 0) sol.residual = model_residual(sol.point, theta, eta, instance, dgf);
  sol.objective_value = eta * (g.dot(sol.point) + instance.reg.value(sol.point)) + bregman(dgf, sol.point, x);
  return sol;
}

SubproblemSolution linearized_min(const Vector& x, double rho, const CompositeInstance& instance,
                                  const DistanceGenerator& dgf, const SolverOptions& options) {
  if (!(rho > 0.0)) throw std::invalid_argument("linearized_min needs rho > 0");
  const Vector grad = instance.f_grad(x);
  SubproblemSolution sol = mirror_step(x, grad, 1.0 / rho, instance, dgf, options);
  sol.objective_value = grad.dot(sol.point - x) + rho * bregman(dgf, sol.point, x) + instance.reg.value(sol.point) -
                        instance.reg.value(x);
  return sol;
}

SubproblemSolution phi_prox(const Vector& x, double rho, const CompositeInstance& instance,
                            const DistanceGenerator& dgf, const SolverOptions& options) {
  const double ell = instance.ell_for(dgf);
  const double lower = instance.weak_convexity_for(dgf);
  if (!(rho > lower)) {
    throw DomainError("phi_prox needs rho above the weak-convexity modulus (rho = " + std::to_string(rho) +
                      ", modulus = " + std::to_string(lower) + ")");
  }
  check_point(x, instance, dgf);

  const Vector grad_omega_x = omega_grad(dgf, x);
  const double tau = 1.0 / (rho + ell);
  SubproblemSolution sol;
  Vector y = x;
  double residual = std::numeric_limits<double>::infinity();
  const double floor = 64.0 * std::numeric_limits<double>::epsilon();
  int it = 0;
  for (it = 1; it <= options.max_iter; ++it) {
    const Vector theta = (rho * grad_omega_x + ell * omega_grad(dgf, y) - instance.f_grad(y)) * tau;
    int inner = 0;
    double inner_residual = 0.0;
    Vector next = dual_step(theta, tau, y, instance, dgf, options, inner, inner_residual);
    residual = (next - y).norm() / std::max(1.0, next.norm());
    y = std::move(next);
    if (residual <= std::max(options.tol, floor) || ell == 0.0) break;
  }
  if (it > options.max_iter) throw SolverError("phi_prox did not converge", residual);
  sol.point = y;
  sol.iterations = std::min(it, options.max_iter);
  sol.residual = ell == 0.0 ? 0.0 : residual;
  sol.objective_value = instance.f_value(y) + instance.reg.value(y) + rho * bregman(dgf, y, x);
  return sol;
}

}  // namespace smd
