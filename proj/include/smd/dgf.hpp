#pragma once

#include <memory>
#include <string>

#include "smd/types.hpp"

namespace smd {

enum class DgfKind { Euclidean, SimplexEntropy, ProductSimplexEntropy, PolyNorm, Other };

/// Interface every distance-generating function implements. New geometries
/// derive from this and are used through DistanceGenerator without touching
/// callers; the closed-form solvers key off kind() and fall back to the
/// generic iterative path for DgfKind::Other.
class Geometry {
 public:
  virtual ~Geometry() = default;

  virtual DgfKind kind() const = 0;
  virtual std::string name() const = 0;

  /// Open zone S (where the gradient exists).
  virtual bool in_zone(const Vector& x, double margin) const = 0;
  /// Closure cl(S) (where the value exists).
  virtual bool in_closure(const Vector& x) const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual Vector grad(const Vector& x) const = 0;

  /// Norm in which the generator is 1-strongly convex, and its dual.
  virtual double norm(const Vector& v) const = 0;
  virtual double dual_norm(const Vector& v) const = 0;

  /// D(x, y) for x in cl(S), y in S. Kinds with a better-conditioned closed
  /// form override this.
  virtual double divergence(const Vector& x, const Vector& y) const;
};

/// Value handle over a shared immutable Geometry.
class DistanceGenerator {
 public:
  static DistanceGenerator euclidean();
  static DistanceGenerator simplex_entropy();
  static DistanceGenerator product_simplex_entropy(Index rows, Index cols);
  /// omega(x) = |x|^(p+2)/(p+2) + |x|^2/2, any real p >= 0.
  static DistanceGenerator poly_norm(double growth_exponent);

  explicit DistanceGenerator(std::shared_ptr<const Geometry> geometry, double interior_margin = 0.0);

  /// Copy with a different interior margin for zone classification.
  DistanceGenerator with_margin(double margin) const;

  DgfKind kind() const { return geometry_->kind(); }
  std::string name() const { return geometry_->name(); }
  double interior_margin() const { return margin_; }
  const Geometry& geometry() const { return *geometry_; }

  /// Growth exponent p for PolyNorm, 0 otherwise.
  double growth_exponent() const;
  /// Block shape for ProductSimplexEntropy (rows x cols); 1 x d otherwise.
  Index rows() const;
  Index cols() const;

  bool in_zone(const Vector& x) const { return geometry_->in_zone(x, margin_); }
  bool in_closure(const Vector& x) const { return geometry_->in_closure(x); }

  double norm(const Vector& v) const { return geometry_->norm(v); }
  double dual_norm(const Vector& v) const { return geometry_->dual_norm(v); }

 private:
  std::shared_ptr<const Geometry> geometry_;
  double margin_;
};

/// omega(x); DomainError outside cl(S). Entropy uses 0 log 0 = 0.
double omega_value(const DistanceGenerator& dgf, const Vector& x);
/// grad omega(x); DomainError outside the open zone.
Vector omega_grad(const DistanceGenerator& dgf, const Vector& x);
/// D(x, y) = omega(x) - omega(y) - <grad omega(y), x - y>.
double bregman(const DistanceGenerator& dgf, const Vector& x, const Vector& y);
/// D(x, y) + D(y, x); both points in the open zone.
double bregman_sym(const DistanceGenerator& dgf, const Vector& x, const Vector& y);

}  // namespace smd
