#include "smd/dgf.hpp"

#include <cmath>
#include <sstream>

#include "smd/kernels.hpp"

namespace smd {

double Geometry::divergence(const Vector& x, const Vector& y) const {
  return value(x) - value(y) - grad(y).dot(x - y);
}

namespace {

class EuclideanGeometry final : public Geometry {
 public:
  DgfKind kind() const override { return DgfKind::Euclidean; }
  std::string name() const override { return "euclidean"; }
  bool in_zone(const Vector& x, double) const override { return x.allFinite(); }
  bool in_closure(const Vector& x) const override { return x.allFinite(); }
  double value(const Vector& x) const override { return 0.5 * x.squaredNorm(); }
  Vector grad(const Vector& x) const override { return x; }
  double norm(const Vector& v) const override { return v.norm(); }
  double dual_norm(const Vector& v) const override { return v.norm(); }
  double divergence(const Vector& x, const Vector& y) const override { return 0.5 * (x - y).squaredNorm(); }
};

// Negative Shannon entropy on the positive orthant. Shared by the single
// simplex (one row) and product-of-simplices (rows x cols, row-major) kinds;
// only the norm pair differs.
class EntropyGeometry final : public Geometry {
 public:
  EntropyGeometry(Index rows, Index cols, bool product) : rows_(rows), cols_(cols), product_(product) {}

  DgfKind kind() const override {
    return product_ ? DgfKind::ProductSimplexEntropy : DgfKind::SimplexEntropy;
  }
  std::string name() const override {
    if (!product_) return "entropy";
    std::ostringstream os;
    os << "product_entropy(" << rows_ << "x" << cols_ << ")";
    return os.str();
  }

  bool in_zone(const Vector& x, double margin) const override {
    return shape_ok(x) && x.allFinite() && (x.array() > margin).all();
  }
  bool in_closure(const Vector& x) const override {
    return shape_ok(x) && x.allFinite() && (x.array() >= 0.0).all();
  }

  double value(const Vector& x) const override {
    double total = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) total += x[i] * std::log(x[i]);
    }
    return total;
  }
  Vector grad(const Vector& x) const override { return (x.array().log() + 1.0).matrix(); }

  double norm(const Vector& v) const override {
    if (!product_) return v.lpNorm<1>();
    return norm_21(as_matrix(v));
  }
  double dual_norm(const Vector& v) const override {
    if (!product_) return v.lpNorm<Eigen::Infinity>();
    return norm_2inf(as_matrix(v));
  }

  // sum x log(x/y) - x + y: avoids the cancellation in the generic formula.
  double divergence(const Vector& x, const Vector& y) const override {
    double total = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      total += y[i] - x[i];
      if (x[i] > 0.0) total += x[i] * std::log(x[i] / y[i]);
    }
    return std::max(total, 0.0);
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

 private:
  bool shape_ok(const Vector& x) const { return !product_ || x.size() == rows_ * cols_; }
  Eigen::Map<const RowMajorMatrix> as_matrix(const Vector& v) const {
    return Eigen::Map<const RowMajorMatrix>(v.data(), rows_, cols_);
  }

  Index rows_;
  Index cols_;
  bool product_;
};

class PolyNormGeometry final : public Geometry {
 public:
  explicit PolyNormGeometry(double p) : p_(p) {}

  DgfKind kind() const override { return DgfKind::PolyNorm; }
  std::string name() const override {
    std::ostringstream os;
    os << "polynorm(p=" << p_ << ")";
    return os.str();
  }
  bool in_zone(const Vector& x, double) const override { return x.allFinite(); }
  bool in_closure(const Vector& x) const override { return x.allFinite(); }

  double value(const Vector& x) const override {
    const double n = x.norm();
    return std::pow(n, p_ + 2.0) / (p_ + 2.0) + 0.5 * n * n;
  }
  Vector grad(const Vector& x) const override {
    const double n = x.norm();
    const double scale = (p_ == 0.0 ? 1.0 : std::pow(n, p_)) + 1.0;
    return scale * x;
  }
  double norm(const Vector& v) const override { return v.norm(); }
  double dual_norm(const Vector& v) const override { return v.norm(); }

  double p() const { return p_; }

 private:
  double p_;
};

}  // namespace

DistanceGenerator::DistanceGenerator(std::shared_ptr<const Geometry> geometry, double interior_margin)
    : geometry_(std::move(geometry)), margin_(interior_margin) {
  if (!geometry_) throw std::invalid_argument("DistanceGenerator: null geometry");
  if (!(margin_ >= 0.0)) throw std::invalid_argument("DistanceGenerator: negative interior margin");
}

DistanceGenerator DistanceGenerator::euclidean() {
  static const auto shared = std::make_shared<const EuclideanGeometry>();
  return DistanceGenerator(shared);
}

DistanceGenerator DistanceGenerator::simplex_entropy() {
  static const auto shared = std::make_shared<const EntropyGeometry>(1, 0, false);
  return DistanceGenerator(shared);
}

DistanceGenerator DistanceGenerator::product_simplex_entropy(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("product_simplex_entropy: empty shape");
  return DistanceGenerator(std::make_shared<const EntropyGeometry>(rows, cols, true));
}

DistanceGenerator DistanceGenerator::poly_norm(double growth_exponent) {
  if (!(growth_exponent >= 0.0) || !std::isfinite(growth_exponent)) {
    throw std::invalid_argument("poly_norm: growth exponent must be a finite p >= 0");
  }
  return DistanceGenerator(std::make_shared<const PolyNormGeometry>(growth_exponent));
}

DistanceGenerator DistanceGenerator::with_margin(double margin) const { return DistanceGenerator(geometry_, margin); }

double DistanceGenerator::growth_exponent() const {
  if (const auto* poly = dynamic_cast<const PolyNormGeometry*>(geometry_.get())) return poly->p();
  return 0.0;
}

Index DistanceGenerator::rows() const {
  if (kind() == DgfKind::ProductSimplexEntropy) return static_cast<const EntropyGeometry&>(*geometry_).rows();
  return 1;
}

Index DistanceGenerator::cols() const {
  if (kind() == DgfKind::ProductSimplexEntropy) return static_cast<const EntropyGeometry&>(*geometry_).cols();
  return 0;
}

double omega_value(const DistanceGenerator& dgf, const Vector& x) {
  if (!dgf.in_closure(x)) throw DomainError("omega_value: point outside the closed zone of " + dgf.name());
  return dgf.geometry().value(x);
}

Vector omega_grad(const DistanceGenerator& dgf, const Vector& x) {
  if (!dgf.in_zone(x)) throw DomainError("omega_grad: point outside the open zone of " + dgf.name());
  return dgf.geometry().grad(x);
}

double bregman(const DistanceGenerator& dgf, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("bregman: dimension mismatch");
  if (!dgf.in_closure(x)) throw DomainError("bregman: first argument outside the closed zone");
  if (!dgf.in_zone(y)) throw DomainError("bregman: second argument outside the open zone");
  return std::max(dgf.geometry().divergence(x, y), 0.0);
}

double bregman_sym(const DistanceGenerator& dgf, const Vector& x, const Vector& y) {
  if (!dgf.in_zone(x) || !dgf.in_zone(y)) throw DomainError("bregman_sym: both points must lie in the open zone");
  return bregman(dgf, x, y) + bregman(dgf, y, x);
}

}  // namespace smd
