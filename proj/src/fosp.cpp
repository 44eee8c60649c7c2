#include "smd/fosp.hpp"

#include <cmath>
#include <limits>

namespace smd {

double bpm(const Vector& x, double rho, const CompositeInstance& instance, const DistanceGenerator& dgf,
           const SolverOptions& options) {
  const auto prox = phi_prox(x, rho, instance, dgf, options);
  return rho * rho * bregman_sym(dgf, prox.point, x);
}

namespace {

// Dsym(a, b) where `a` may sit on the boundary of an entropic zone; the
// reverse divergence is then infinite in exact arithmetic, so it is
// evaluated on the floored point.
double sym_divergence(const DistanceGenerator& dgf, const Vector& a, const Vector& b) {
  if (dgf.in_zone(a)) return bregman_sym(dgf, a, b);
  const Vector floored = a.cwiseMax(kEntropyFloor);
  return bregman(dgf, a, b) + bregman(dgf, b, floored);
}

}  // namespace

double bgm(const Vector& x, double rho, const CompositeInstance& instance, const DistanceGenerator& dgf,
           const SolverOptions& options) {
  const auto plus = linearized_min(x, rho, instance, dgf, options);
  return rho * rho * sym_divergence(dgf, plus.point, x);
}

double bfbe(const Vector& x, double rho, const CompositeInstance& instance, const DistanceGenerator& dgf,
            const SolverOptions& options) {
  const auto plus = linearized_min(x, rho, instance, dgf, options);
  return std::max(0.0, -2.0 * rho * plus.objective_value);
}

StationarityReport stationarity(const Vector& x, double rho, const CompositeInstance& instance,
                                const DistanceGenerator& dgf, const SolverOptions& options) {
  StationarityReport report;
  report.rho = rho;
  const auto prox = phi_prox(x, rho, instance, dgf, options);
  report.prox_point = prox.point;
  report.bpm = rho * rho * bregman_sym(dgf, prox.point, x);
  report.bpm_residual = prox.residual;
  const auto plus = linearized_min(x, rho, instance, dgf, options);
  report.gradient_point = plus.point;
  report.bgm = rho * rho * sym_divergence(dgf, plus.point, x);
  report.bfbe = std::max(0.0, -2.0 * rho * plus.objective_value);
  report.bgm_residual = plus.residual;
  report.bfbe_residual = plus.residual;
  return report;
}

double sandwich_constant(double ell, double rho, double s) {
  if (!(s > 0.0) || !(ell >= 0.0)) throw DomainError("sandwich_constant needs s > 0 and ell >= 0");
  if (!(rho > ell / s + 2.0 * ell)) throw DomainError("sandwich_constant needs rho > ell/s + 2 ell");
  const double inv = 1.0 + 1.0 / s;
  return ((1.0 + s) * (rho - ell) + inv * ell) / (rho - ell - inv * ell);
}

SandwichReport verify_lemma1(const CompositeInstance& instance, const DistanceGenerator& dgf, int samples,
                             double ell, double rho, double s, std::uint64_t seed, double slack) {
  if (dgf.kind() != DgfKind::Euclidean) {
    throw DomainError("the sandwich inequality is only asserted for the Euclidean geometry");
  }
  SandwichReport report;
  report.constant = sandwich_constant(ell, rho, s);
  report.min_ratio = std::numeric_limits<double>::infinity();
  Rng rng(seed, Stream::kSampling);
  for (int k = 0; k < samples; ++k) {
    const Vector x = sample_feasible_point(instance, rng);
    const double delta = bpm(x, rho, instance, dgf);
    const double plus = bgm(x, rho, instance, dgf);
    const double lower_gap = delta / report.constant - plus;
    const double upper_gap = plus - report.constant * delta;
    const double worst = std::max(lower_gap, upper_gap);
    report.max_violation = std::max(report.max_violation, worst);
    if (worst > slack) ++report.violations;
    if (delta > 0.0) {
      report.min_ratio = std::min(report.min_ratio, plus / delta);
      report.max_ratio = std::max(report.max_ratio, plus / delta);
    }
    ++report.samples;
  }
  return report;
}

DominanceReport verify_lemma2(const CompositeInstance& instance, const DistanceGenerator& dgf, int samples,
                              double rho, std::uint64_t seed, double slack) {
  DominanceReport report;
  report.min_ratio = std::numeric_limits<double>::infinity();
  Rng rng(seed, Stream::kSampling);
  for (int k = 0; k < samples; ++k) {
    const Vector x = sample_feasible_point(instance, rng);
    const double lhs = 2.0 * bfbe(x, rho / 2.0, instance, dgf);
    const double rhs = bgm(x, rho, instance, dgf);
    const double gap = rhs - lhs;
    report.max_violation = std::max(report.max_violation, gap);
    if (gap > slack) ++report.violations;
    if (rhs > 0.0) report.min_ratio = std::min(report.min_ratio, lhs / rhs);
    ++report.samples;
  }
  return report;
}

double gap_instance_bfbe(double x, double rho) {
  return 2.0 * rho * std::abs(x) + 2.0 * rho * (1.0 - rho / 2.0) * x * x;
}

double gap_instance_bgm(double x, double rho) { return rho * rho * x * x; }

double prox_gradient_distance(const Vector& x, double rho, const CompositeInstance& instance,
                              const DistanceGenerator& dgf, const SolverOptions& options) {
  const auto prox = phi_prox(x, rho, instance, dgf, options);
  const auto plus = linearized_min(x, rho, instance, dgf, options);
  return rho * rho * sym_divergence(dgf, plus.point, prox.point);
}

double frank_wolfe_gap(const Vector& x, const CompositeInstance& instance) {
  const Vector g = instance.f_grad(x);
  const FeasibleSet& set = instance.feasible;
  switch (set.kind()) {
    case FeasibleSet::Kind::Box: {
      double gap = g.dot(x);
      for (Index i = 0; i < x.size(); ++i) {
        const double y = g[i] > 0.0 ? set.lo()[i] : set.hi()[i];
        if (!std::isfinite(y) && g[i] != 0.0) return std::numeric_limits<double>::infinity();
        if (g[i] != 0.0) gap -= g[i] * y;
      }
      return gap;
    }
    case FeasibleSet::Kind::Simplex:
      return g.dot(x) - g.minCoeff();
    case FeasibleSet::Kind::ProductSimplex: {
      Eigen::Map<const RowMajorMatrix> gm(g.data(), set.rows(), set.cols());
      return g.dot(x) - gm.rowwise().minCoeff().sum();
    }
    case FeasibleSet::Kind::AllSpace:
      return g.isZero(0.0) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

double stationarity_residual(const Vector& x, const CompositeInstance& instance) {
  return (x - euclidean_prox(instance, x - instance.f_grad(x), 1.0)).norm();
}

}  // namespace smd
