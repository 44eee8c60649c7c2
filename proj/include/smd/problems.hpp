#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "smd/dgf.hpp"
#include "smd/rng.hpp"
#include "smd/types.hpp"

namespace smd {

/// Closed convex feasible set X.
class FeasibleSet {
 public:
  enum class Kind { AllSpace, Box, Simplex, ProductSimplex };

  static FeasibleSet all_space();
  /// Per-coordinate bounds; infinite bounds allowed. Rejects lo > hi.
  static FeasibleSet box(Vector lo, Vector hi);
  static FeasibleSet box(Index dim, double lo, double hi);
  static FeasibleSet simplex(Index dim);
  static FeasibleSet product_simplex(Index rows, Index cols);

  Kind kind() const { return kind_; }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  bool contains(const Vector& x, double tol = 1e-9) const;
  /// Euclidean projection onto X.
  Vector project(const Vector& x) const;
  /// Euclidean diameter; +inf when unbounded.
  double diameter() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::AllSpace;
  Vector lo_, hi_;
  Index rows_ = 0, cols_ = 0;
};

/// Convex, proper, lsc regulariser r.
class Regularizer {
 public:
  enum class Kind { Zero, L1, Custom };
  using ValueFn = std::function<double(const Vector&)>;
  /// Returns argmin_{y in X} tau * r(y) + |y - v|^2 / 2 (feasible set included).
  using ProxFn = std::function<Vector(const Vector& v, double tau)>;

  static Regularizer zero() { return Regularizer(Kind::Zero, 0.0); }
  static Regularizer l1(double weight);
  static Regularizer custom(ValueFn value, ProxFn prox, std::string tag);

  Kind kind() const { return kind_; }
  double weight() const { return weight_; }
  const ProxFn& prox() const { return prox_; }
  const std::string& tag() const { return tag_; }
  double value(const Vector& x) const;
  std::string describe() const;

 private:
  Regularizer(Kind kind, double weight) : kind_(kind), weight_(weight) {}
  Kind kind_;
  double weight_;
  ValueFn value_;
  ProxFn prox_;
  std::string tag_;
};

/// Declared relative-smoothness constant of F with respect to one geometry.
/// `lower` bounds the curvature from below: F(x) - F(y) - <grad F(y), x - y>
/// >= -lower D(x, y). It never exceeds ell and is smaller for (nearly)
/// convex F; NaN means "same as ell".
struct SmoothnessCertificate {
  DgfKind kind;
  double ell;
  std::string note;
  double lower = std::numeric_limits<double>::quiet_NaN();
};

/// ||Hess F(x)|| <= L + L_r |x|^r, estimated on a sampling ball.
struct GrowthCertificate {
  double exponent = 2.0;
  double L = 0.0;
  double L_r = 0.0;
  double radius = 0.0;
  int samples = 0;
  double ell() const { return std::max(L, L_r); }
};

struct QuadraticData {
  Matrix curvature;
  Vector linear;
};

/// min_{x in X} F(x) + r(x) with exact first-order oracle for F.
struct CompositeInstance {
  std::string name;
  Index dim = 0;
  std::function<double(const Vector&)> f_value;
  std::function<Vector(const Vector&)> f_grad;
  Regularizer reg = Regularizer::zero();
  FeasibleSet feasible = FeasibleSet::all_space();
  std::vector<SmoothnessCertificate> smoothness;
  std::optional<double> phi_star;
  std::string phi_star_provenance;
  Vector x0;
  std::optional<QuadraticData> quadratic;
  /// Minibatch gradient estimate, when the instance has a finite-sum form.
  std::function<Vector(const Vector&, Rng&)> minibatch_grad;
  std::optional<GrowthCertificate> growth;

  /// Declared ell for `dgf`. Falls back to the Euclidean certificate, which
  /// stays valid for every built-in geometry on its natural domain since
  /// their norms dominate the l2 norm.
  double ell_for(const DistanceGenerator& dgf) const;
  /// Weak-convexity modulus for `dgf` (the certificate's `lower`).
  double weak_convexity_for(const DistanceGenerator& dgf) const;
};

/// Phi(x) = F(x) + r(x), +inf outside X.
double phi_value(const CompositeInstance& instance, const Vector& x);

/// argmin_{y in X} tau * r(y) + |y - v|^2 / 2.
Vector euclidean_prox(const CompositeInstance& instance, const Vector& v, double tau);

// ---------------------------------------------------------------------------
// Built-in instances

/// F(x) = x'Ax/2 + q'x, r = w|x|_1, X a box or all space. ell = ||A||_2.
/// Phi* is computed exactly when A is diagonal (separable problem).
CompositeInstance make_quadratic_l1(const Matrix& curvature, double l1_weight, const FeasibleSet& set,
                                    const Vector& linear = Vector());

/// The 1-D instance F = x^2/2, r = |x|, X = [0, 1] (ell = 1, Phi* = 0).
CompositeInstance make_bfbe_gap_instance();

/// Random symmetric curvature with entries in [-1, 1] (optionally diagonal),
/// linear term in [-1, 1], l1 weight and box drawn from `seed`.
CompositeInstance make_random_quadratic_l1(Index dim, std::uint64_t seed, bool bounded = true, bool diagonal = false);

/// F(x) = x'Ax/2 + q'x on the unit simplex. Certificates: entropy
/// ell = max |A_ij|, Euclidean ell = ||A||_2. Phi* exact for concave A.
CompositeInstance make_simplex_quadratic(const Matrix& curvature, const Vector& linear);
CompositeInstance make_random_simplex_quadratic(Index dim, std::uint64_t seed);

/// Two-layer linear autoencoder F(W) = (1/n) sum |W2 W1 a_i - a_i|^2 on
/// synthetic standard-normal data. x = [vec(W1); vec(W2)] (column-major),
/// W1 is d_e x d_f and W2 is d_f x d_e. Initial point ~ N(1, 0.01^2).
CompositeInstance make_autoencoder(Index d_f, Index d_e, Index n, std::uint64_t data_seed, Index batch = 100);

/// Hessian-growth constants for exponent p estimated by power iteration on
/// finite-difference Hessian-vector products at sampled points.
GrowthCertificate estimate_growth_certificate(const CompositeInstance& instance, double exponent, double radius,
                                              int samples, std::uint64_t seed);

/// Upper estimate of Phi* by multi-start projected gradient (plus simplex
/// vertices). Exact structure is preferred when available.
double estimate_phi_star(const CompositeInstance& instance, int starts, int iterations, std::uint64_t seed);

/// Uniform-ish random point in the relative interior of X (Dirichlet on
/// simplices, uniform on finite boxes, Gaussian around x0 elsewhere).
Vector sample_feasible_point(const CompositeInstance& instance, Rng& rng, double scale = 1.0);

/// Largest sampled |F(x) - F(y) - <grad F(y), x - y>| / D(x, y).
double relative_smoothness_ratio(const CompositeInstance& instance, const DistanceGenerator& dgf, int pairs,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stochastic oracle

struct NoiseModel {
  enum class Kind { None, GaussianIso, GaussianPerturb, Minibatch };
  Kind kind = Kind::None;
  double sigma = 0.0;

  static NoiseModel none() { return {}; }
  /// Additive N(0, sigma^2 I) noise.
  static NoiseModel gaussian_iso(double sigma) { return {Kind::GaussianIso, sigma}; }
  /// Same distribution; tagged as privacy noise b_t.
  static NoiseModel gaussian_perturb(double sigma) { return {Kind::GaussianPerturb, sigma}; }
  static NoiseModel minibatch() { return {Kind::Minibatch, 0.0}; }
  std::string describe() const;
};

/// grad F(x) + noise. Draw k uses its own stream derived from (seed, k), so
/// the sequence is a function of the seed and the draw counter only. One
/// oracle per worker.
class StochasticOracle {
 public:
  StochasticOracle(CompositeInstance instance, NoiseModel noise, std::uint64_t seed);

  Vector sample(const Vector& x);
  std::uint64_t draws() const { return draws_; }
  void reset() { draws_ = 0; }
  const NoiseModel& noise() const { return noise_; }
  const CompositeInstance& instance() const { return instance_; }
  std::uint64_t seed() const { return seed_; }

  /// Upper bound on E||noise||_*^2 in the dual norm of `dgf`; NaN when the
  /// variance is not declared (minibatch).
  double variance_bound(const DistanceGenerator& dgf) const;
  /// sigma^2 such that ||noise||_* is sigma-sub-Gaussian.
  double subgaussian_sigma2(const DistanceGenerator& dgf) const;

 private:
  CompositeInstance instance_;
  NoiseModel noise_;
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
};

Vector stoch_grad(StochasticOracle& oracle, const Vector& x);

}  // namespace smd
