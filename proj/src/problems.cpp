#include "smd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "smd/kernels.hpp"

namespace smd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

double spectral_norm_symmetric(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

// max(0, -lambda_min(A)).
double negative_curvature(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  return std::max(0.0, -eig.eigenvalues().minCoeff());
}

bool is_diagonal(const Matrix& a) {
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

Vector default_start(const FeasibleSet& set, Index dim) {
  switch (set.kind()) {
    case FeasibleSet::Kind::AllSpace:
      return Vector::Ones(dim);
    case FeasibleSet::Kind::Simplex:
      return Vector::Constant(dim, 1.0 / static_cast<double>(dim));
    case FeasibleSet::Kind::ProductSimplex:
      return Vector::Constant(dim, 1.0 / static_cast<double>(set.cols()));
    case FeasibleSet::Kind::Box: {
      Vector x(dim);
      for (Index i = 0; i < dim; ++i) {
        const double lo = set.lo()[i], hi = set.hi()[i];
        if (std::isfinite(lo) && std::isfinite(hi)) {
          x[i] = 0.5 * (lo + hi);
        } else if (std::isfinite(lo)) {
          x[i] = lo + 1.0;
        } else if (std::isfinite(hi)) {
          x[i] = hi - 1.0;
        } else {
          x[i] = 1.0;
        }
      }
      return x;
    }
  }
  return Vector::Zero(dim);
}

// Exact minimum of a y^2/2 + q y + w|y| over [lo, hi]; -inf if unbounded.
double separable_min(double a, double q, double w, double lo, double hi) {
  const bool bounded = std::isfinite(lo) && std::isfinite(hi);
  if (!bounded && (a < 0.0 || (a == 0.0 && std::abs(q) > w))) return -kInf;
  auto f = [&](double y) { return 0.5 * a * y * y + q * y + w * std::abs(y); };
  std::vector<double> candidates;
  if (std::isfinite(lo)) candidates.push_back(lo);
  if (std::isfinite(hi)) candidates.push_back(hi);
  candidates.push_back(0.0);
  if (a > 0.0) {
    candidates.push_back(-(q + w) / a);
    candidates.push_back(-(q - w) / a);
  }
  double best = kInf;
  for (double y : candidates) best = std::min(best, f(std::clamp(y, lo, hi)));
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeasibleSet

FeasibleSet FeasibleSet::all_space() { return {}; }

FeasibleSet FeasibleSet::box(Vector lo, Vector hi) {
  require(lo.size() == hi.size(), "box bounds differ in dimension");
  for (Index i = 0; i < lo.size(); ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      throw DomainError("box with lo > hi is empty");
    }
  }
  FeasibleSet set;
  set.kind_ = Kind::Box;
  set.lo_ = std::move(lo);
  set.hi_ = std::move(hi);
  set.rows_ = 1;
  set.cols_ = set.lo_.size();
  return set;
}

FeasibleSet FeasibleSet::box(Index dim, double lo, double hi) {
  return box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

FeasibleSet FeasibleSet::simplex(Index dim) {
  require(dim >= 1, "simplex dimension must be positive");
  FeasibleSet set;
  set.kind_ = Kind::Simplex;
  set.rows_ = 1;
  set.cols_ = dim;
  return set;
}

FeasibleSet FeasibleSet::product_simplex(Index rows, Index cols) {
  require(rows >= 1 && cols >= 1, "product simplex shape must be positive");
  FeasibleSet set;
  set.kind_ = Kind::ProductSimplex;
  set.rows_ = rows;
  set.cols_ = cols;
  return set;
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  if (!x.allFinite()) return false;
  switch (kind_) {
    case Kind::AllSpace:
      return true;
    case Kind::Box:
      return x.size() == lo_.size() && ((x - lo_).array() >= -tol).all() && ((hi_ - x).array() >= -tol).all();
    case Kind::Simplex:
      return x.size() == cols_ && (x.array() >= -tol).all() && std::abs(x.sum() - 1.0) <= tol;
    case Kind::ProductSimplex: {
      if (x.size() != rows_ * cols_ || (x.array() < -tol).any()) return false;
      Eigen::Map<const RowMajorMatrix> m(x.data(), rows_, cols_);
      return ((m.rowwise().sum().array() - 1.0).abs() <= tol).all();
    }
  }
  return false;
}

Vector FeasibleSet::project(const Vector& x) const {
  switch (kind_) {
    case Kind::AllSpace:
      return x;
    case Kind::Box:
      return x.cwiseMax(lo_).cwiseMin(hi_);
    case Kind::Simplex:
      return simplex_project(x);
    case Kind::ProductSimplex: {
      Vector out(x.size());
      Eigen::Map<const RowMajorMatrix> m(x.data(), rows_, cols_);
      Eigen::Map<RowMajorMatrix> o(out.data(), rows_, cols_);
      o = project_rows_to_simplex(m);
      return out;
    }
  }
  return x;
}

double FeasibleSet::diameter() const {
  switch (kind_) {
    case Kind::AllSpace:
      return kInf;
    case Kind::Box:
      return (hi_ - lo_).norm();
    case Kind::Simplex:
      return cols_ > 1 ? std::sqrt(2.0) : 0.0;
    case Kind::ProductSimplex:
      return cols_ > 1 ? std::sqrt(2.0 * static_cast<double>(rows_)) : 0.0;
  }
  return kInf;
}

std::string FeasibleSet::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::AllSpace:
      os << "all_space";
      break;
    case Kind::Box:
      os << "box(" << lo_.size() << ")";
      break;
    case Kind::Simplex:
      os << "simplex(" << cols_ << ")";
      break;
    case Kind::ProductSimplex:
      os << "product_simplex(" << rows_ << "x" << cols_ << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Regularizer

Regularizer Regularizer::l1(double weight) {
  require(weight >= 0.0 && std::isfinite(weight), "l1 weight must be finite and nonnegative");
  return weight == 0.0 ? zero() : Regularizer(Kind::L1, weight);
}

Regularizer Regularizer::custom(ValueFn value, ProxFn prox, std::string tag) {
  require(static_cast<bool>(value) && static_cast<bool>(prox), "custom regulariser needs value and prox");
  Regularizer reg(Kind::Custom, 0.0);
  reg.value_ = std::move(value);
  reg.prox_ = std::move(prox);
  reg.tag_ = std::move(tag);
  return reg;
}

double Regularizer::value(const Vector& x) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::L1:
      return weight_ * x.lpNorm<1>();
    case Kind::Custom:
      return value_(x);
  }
  return 0.0;
}

std::string Regularizer::describe() const {
  switch (kind_) {
    case Kind::Zero:
      return "zero";
    case Kind::L1: {
      std::ostringstream os;
      os.precision(17);
      os << "l1(" << weight_ << ")";
      return os.str();
    }
    case Kind::Custom:
      return "custom(" + tag_ + ")";
  }
  return "";
}

// ---------------------------------------------------------------------------
// CompositeInstance

namespace {

const SmoothnessCertificate* find_certificate(const CompositeInstance& inst, DgfKind kind) {
  for (const auto& cert : inst.smoothness)
    if (cert.kind == kind) return &cert;
  if (kind != DgfKind::Other) {
    for (const auto& cert : inst.smoothness)
      if (cert.kind == DgfKind::Euclidean) return &cert;
  }
  return nullptr;
}

}  // namespace

double CompositeInstance::ell_for(const DistanceGenerator& dgf) const {
  if (dgf.kind() == DgfKind::PolyNorm && growth) return growth->ell();
  if (const auto* cert = find_certificate(*this, dgf.kind())) return cert->ell;
  throw DomainError("instance '" + name + "' declares no smoothness constant for geometry " + dgf.name());
}

double CompositeInstance::weak_convexity_for(const DistanceGenerator& dgf) const {
  if (dgf.kind() == DgfKind::PolyNorm && growth) return growth->ell();
  if (const auto* cert = find_certificate(*this, dgf.kind())) {
    return std::isnan(cert->lower) ? cert->ell : std::min(cert->lower, cert->ell);
  }
  throw DomainError("instance '" + name + "' declares no smoothness constant for geometry " + dgf.name());
}

double phi_value(const CompositeInstance& instance, const Vector& x) {
  if (x.size() != instance.dim || !instance.feasible.contains(x)) return kInf;
  return instance.f_value(x) + instance.reg.value(x);
}

Vector euclidean_prox(const CompositeInstance& instance, const Vector& v, double tau) {
  const Regularizer& reg = instance.reg;
  const FeasibleSet& set = instance.feasible;
  switch (reg.kind()) {
    case Regularizer::Kind::Zero:
      return set.project(v);
    case Regularizer::Kind::Custom:
      return reg.prox()(v, tau);
    case Regularizer::Kind::L1:
      switch (set.kind()) {
        case FeasibleSet::Kind::AllSpace:
        case FeasibleSet::Kind::Box:
          return set.project(soft_threshold(v, tau * reg.weight()));
        case FeasibleSet::Kind::Simplex:
        case FeasibleSet::Kind::ProductSimplex:
          // |y|_1 is constant on (products of) simplices.
          return set.project(v);
      }
  }
  return set.project(v);
}

// ---------------------------------------------------------------------------
// Built-in instances

CompositeInstance make_quadratic_l1(const Matrix& curvature, double l1_weight, const FeasibleSet& set,
                                    const Vector& linear) {
  const Index dim = curvature.rows();
  require(dim >= 1 && curvature.cols() == dim, "curvature must be square and nonempty");
  require(curvature.allFinite(), "curvature must be finite");
  require((curvature - curvature.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + curvature.cwiseAbs().maxCoeff()),
          "curvature must be symmetric");
  require(set.kind() == FeasibleSet::Kind::AllSpace || set.kind() == FeasibleSet::Kind::Box,
          "quadratic+l1 instances live on a box or all space");
  if (set.kind() == FeasibleSet::Kind::Box) require(set.lo().size() == dim, "box dimension mismatch");
  const Vector q = linear.size() == 0 ? Vector::Zero(dim) : linear;
  require(q.size() == dim, "linear term dimension mismatch");

  auto a = std::make_shared<const Matrix>(curvature);
  auto b = std::make_shared<const Vector>(q);
  CompositeInstance inst;
  inst.name = "quadratic_l1";
  inst.dim = dim;
  inst.f_value = [a, b](const Vector& x) { return 0.5 * x.dot(*a * x) + b->dot(x); };
  inst.f_grad = [a, b](const Vector& x) -> Vector { return *a * x + *b; };
  inst.reg = Regularizer::l1(l1_weight);
  inst.feasible = set;
  inst.smoothness.push_back(
      {DgfKind::Euclidean, spectral_norm_symmetric(curvature), "operator norm of A", negative_curvature(curvature)});
  inst.quadratic = QuadraticData{curvature, q};
  inst.x0 = default_start(set, dim);

  if (is_diagonal(curvature)) {
    double total = 0.0;
    for (Index i = 0; i < dim; ++i) {
      const double lo = set.kind() == FeasibleSet::Kind::Box ? set.lo()[i] : -kInf;
      const double hi = set.kind() == FeasibleSet::Kind::Box ? set.hi()[i] : kInf;
      total += separable_min(curvature(i, i), q[i], l1_weight, lo, hi);
    }
    if (std::isfinite(total)) {
      inst.phi_star = total;
      inst.phi_star_provenance = "exact (separable per-coordinate minimisation)";
    }
  }
  return inst;
}

CompositeInstance make_bfbe_gap_instance() {
  CompositeInstance inst = make_quadratic_l1(Matrix::Identity(1, 1), 1.0, FeasibleSet::box(1, 0.0, 1.0));
  inst.name = "bfbe_gap_1d";
  return inst;
}

CompositeInstance make_random_quadratic_l1(Index dim, std::uint64_t seed, bool bounded, bool diagonal) {
  require(dim >= 1, "dimension must be positive");
  Rng rng(seed, Stream::kData);
  Matrix b(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) b(i, j) = rng.uniform(-1.0, 1.0);
  Matrix a = diagonal ? Matrix(b.diagonal().asDiagonal()) : Matrix(0.5 * (b + b.transpose()));
  Vector q(dim);
  for (Index i = 0; i < dim; ++i) q[i] = rng.uniform(-1.0, 1.0);
  const double w = rng.uniform(0.05, 1.0);
  FeasibleSet set = FeasibleSet::all_space();
  if (bounded) {
    Vector lo(dim), hi(dim);
    for (Index i = 0; i < dim; ++i) {
      lo[i] = rng.uniform(-2.0, -0.5);
      hi[i] = rng.uniform(0.5, 2.0);
    }
    set = FeasibleSet::box(lo, hi);
  }
  CompositeInstance inst = make_quadratic_l1(a, w, set, q);
  inst.name = "random_quadratic_l1";
  return inst;
}

CompositeInstance make_simplex_quadratic(const Matrix& curvature, const Vector& linear) {
  const Index dim = curvature.rows();
  require(dim >= 1 && curvature.cols() == dim, "curvature must be square and nonempty");
  if ((curvature - curvature.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + curvature.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("simplex quadratic needs a symmetric matrix");
  }
  const Vector q = linear.size() == 0 ? Vector::Zero(dim) : linear;
  require(q.size() == dim, "linear term dimension mismatch");

  auto a = std::make_shared<const Matrix>(curvature);
  auto b = std::make_shared<const Vector>(q);
  CompositeInstance inst;
  inst.name = "simplex_quadratic";
  inst.dim = dim;
  inst.f_value = [a, b](const Vector& x) { return 0.5 * x.dot(*a * x) + b->dot(x); };
  inst.f_grad = [a, b](const Vector& x) -> Vector { return *a * x + *b; };
  inst.feasible = FeasibleSet::simplex(dim);
  inst.smoothness.push_back({DgfKind::SimplexEntropy, curvature.cwiseAbs().maxCoeff(), "max |A_ij| (l1 smoothness)"});
  inst.smoothness.push_back(
      {DgfKind::Euclidean, spectral_norm_symmetric(curvature), "operator norm of A", negative_curvature(curvature)});
  inst.quadratic = QuadraticData{curvature, q};
  inst.x0 = default_start(inst.feasible, dim);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(curvature, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().maxCoeff() <= 0.0) {
    // Concave: the minimum over the simplex sits at a vertex.
    inst.phi_star = (0.5 * curvature.diagonal() + q).minCoeff();
    inst.phi_star_provenance = "exact (concave, vertex enumeration)";
  }
  return inst;
}

CompositeInstance make_random_simplex_quadratic(Index dim, std::uint64_t seed) {
  require(dim >= 1, "dimension must be positive");
  Rng rng(seed, Stream::kData);
  Matrix b(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) b(i, j) = rng.uniform(-1.0, 1.0);
  Vector q(dim);
  for (Index i = 0; i < dim; ++i) q[i] = rng.uniform(-1.0, 1.0);
  CompositeInstance inst = make_simplex_quadratic(0.5 * (b + b.transpose()), q);
  inst.name = "random_simplex_quadratic";
  return inst;
}

namespace {

struct AutoencoderShape {
  Index d_f, d_e;
  Index w1_size() const { return d_e * d_f; }
};

double autoencoder_loss(const AutoencoderShape& s, const Vector& x, const Matrix& data) {
  Eigen::Map<const Matrix> w1(x.data(), s.d_e, s.d_f);
  Eigen::Map<const Matrix> w2(x.data() + s.w1_size(), s.d_f, s.d_e);
  const Matrix residual = w2 * (w1 * data) - data;
  return residual.squaredNorm() / static_cast<double>(data.cols());
}

Vector autoencoder_grad(const AutoencoderShape& s, const Vector& x, const Matrix& data) {
  Eigen::Map<const Matrix> w1(x.data(), s.d_e, s.d_f);
  Eigen::Map<const Matrix> w2(x.data() + s.w1_size(), s.d_f, s.d_e);
  const Matrix code = w1 * data;
  const Matrix residual = w2 * code - data;
  const double scale = 2.0 / static_cast<double>(data.cols());
  Vector g(x.size());
  Eigen::Map<Matrix> g1(g.data(), s.d_e, s.d_f);
  Eigen::Map<Matrix> g2(g.data() + s.w1_size(), s.d_f, s.d_e);
  g2.noalias() = scale * residual * code.transpose();
  g1.noalias() = scale * (w2.transpose() * residual) * data.transpose();
  return g;
}

}  // namespace

CompositeInstance make_autoencoder(Index d_f, Index d_e, Index n, std::uint64_t data_seed, Index batch) {
  require(d_f >= 1 && d_e >= 1 && d_e <= d_f, "autoencoder needs 1 <= d_e <= d_f");
  require(n >= 1 && batch >= 1, "autoencoder needs n >= 1 and batch >= 1");
  Rng rng(data_seed, Stream::kData);
  auto data = std::make_shared<Matrix>(d_f, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < d_f; ++i) (*data)(i, j) = rng.normal();
  std::shared_ptr<const Matrix> cdata = data;
  const AutoencoderShape shape{d_f, d_e};

  CompositeInstance inst;
  inst.name = "autoencoder";
  inst.dim = 2 * d_e * d_f;
  inst.f_value = [shape, cdata](const Vector& x) { return autoencoder_loss(shape, x, *cdata); };
  inst.f_grad = [shape, cdata](const Vector& x) { return autoencoder_grad(shape, x, *cdata); };
  inst.minibatch_grad = [shape, cdata, batch](const Vector& x, Rng& draw) {
    Matrix sub(cdata->rows(), batch);
    for (Index j = 0; j < batch; ++j) {
      sub.col(j) = cdata->col(static_cast<Index>(draw.index(static_cast<std::uint64_t>(cdata->cols()))));
    }
    return autoencoder_grad(shape, x, sub);
  };
  inst.phi_star = 0.0;
  inst.phi_star_provenance = "lower bound (sum of squares)";
  Rng init(data_seed, Stream::kInitialPoint);
  inst.x0 = Vector(inst.dim);
  for (Index i = 0; i < inst.dim; ++i) inst.x0[i] = init.normal(1.0, 0.01);
  return inst;
}

GrowthCertificate estimate_growth_certificate(const CompositeInstance& instance, double exponent, double radius,
                                              int samples, std::uint64_t seed) {
  require(exponent >= 0.0 && radius > 0.0 && samples >= 1, "invalid growth-estimate parameters");
  Rng rng(seed, Stream::kSampling);
  const Index d = instance.dim;

  auto hessian_norm = [&](const Vector& x) {
    const double h = 1e-5 * (1.0 + x.norm());
    Vector v = rng.normal_vector(d);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < 30; ++it) {
      const Vector hv = (instance.f_grad(x + h * v) - instance.f_grad(x - h * v)) / (2.0 * h);
      estimate = hv.norm();
      if (estimate == 0.0) break;
      v = hv / estimate;
    }
    return estimate;
  };

  GrowthCertificate cert;
  cert.exponent = exponent;
  cert.radius = radius;
  cert.samples = samples;
  cert.L = hessian_norm(Vector::Zero(d));
  for (int k = 0; k < samples; ++k) {
    Vector u = rng.normal_vector(d);
    u.normalize();
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    const Vector x = std::max(r, 1e-3 * radius) * u;
    const double excess = hessian_norm(x) - cert.L;
    if (excess > 0.0) cert.L_r = std::max(cert.L_r, excess / std::pow(x.norm(), exponent));
  }
  return cert;
}

Vector sample_feasible_point(const CompositeInstance& instance, Rng& rng, double scale) {
  const FeasibleSet& set = instance.feasible;
  const Index d = instance.dim;
  const Vector center = instance.x0.size() == d ? instance.x0 : Vector(Vector::Zero(d));
  switch (set.kind()) {
    case FeasibleSet::Kind::AllSpace:
      return center + rng.normal_vector(d, scale);
    case FeasibleSet::Kind::Simplex:
      return rng.simplex_point(d);
    case FeasibleSet::Kind::ProductSimplex: {
      Vector x(d);
      for (Index s = 0; s < set.rows(); ++s) x.segment(s * set.cols(), set.cols()) = rng.simplex_point(set.cols());
      return x;
    }
    case FeasibleSet::Kind::Box: {
      Vector x(d);
      for (Index i = 0; i < d; ++i) {
        const double lo = set.lo()[i], hi = set.hi()[i];
        if (std::isfinite(lo) && std::isfinite(hi)) {
          x[i] = rng.uniform(lo, hi);
        } else if (std::isfinite(lo)) {
          x[i] = lo + scale * std::abs(rng.normal());
        } else if (std::isfinite(hi)) {
          x[i] = hi - scale * std::abs(rng.normal());
        } else {
          x[i] = center[i] + scale * rng.normal();
        }
      }
      return x;
    }
  }
  return center;
}

double relative_smoothness_ratio(const CompositeInstance& instance, const DistanceGenerator& dgf, int pairs,
                                 std::uint64_t seed) {
  Rng rng(seed, Stream::kSampling);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Vector x = sample_feasible_point(instance, rng);
    const Vector y = sample_feasible_point(instance, rng);
    const double div = bregman(dgf, x, y);
    if (div <= 1e-14) continue;
    const double gap = instance.f_value(x) - instance.f_value(y) - instance.f_grad(y).dot(x - y);
    worst = std::max(worst, std::abs(gap) / div);
  }
  return worst;
}

double estimate_phi_star(const CompositeInstance& instance, int starts, int iterations, std::uint64_t seed) {
  double ell = 1.0;
  for (const auto& cert : instance.smoothness)
    if (cert.kind == DgfKind::Euclidean && cert.ell > 0.0) ell = cert.ell;
  const double step = 1.0 / ell;

  std::vector<Vector> inits;
  if (instance.x0.size() == instance.dim) inits.push_back(instance.feasible.project(instance.x0));
  if (instance.feasible.kind() == FeasibleSet::Kind::Simplex && instance.dim <= 64) {
    for (Index i = 0; i < instance.dim; ++i) inits.push_back(Vector::Unit(instance.dim, i));
  }
  Rng rng(seed, Stream::kSampling);
  for (int k = 0; k < starts; ++k) inits.push_back(sample_feasible_point(instance, rng));

  double best = kInf;
  for (Vector x : inits) {
    double value = phi_value(instance, x);
    for (int it = 0; it < iterations; ++it) {
      const Vector next = euclidean_prox(instance, x - step * instance.f_grad(x), step);
      const double next_value = phi_value(instance, next);
      const bool stalled = (next - x).norm() <= 1e-15 * (1.0 + x.norm());
      x = next;
      value = next_value;
      if (stalled) break;
    }
    best = std::min(best, value);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Stochastic oracle

std::string NoiseModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::GaussianIso:
      os << "gaussian_iso(" << sigma << ")";
      break;
    case Kind::GaussianPerturb:
      os << "gaussian_perturb(" << sigma << ")";
      break;
    case Kind::Minibatch:
      return "minibatch";
  }
  return os.str();
}

StochasticOracle::StochasticOracle(CompositeInstance instance, NoiseModel noise, std::uint64_t seed)
    : instance_(std::move(instance)), noise_(noise), seed_(seed) {
  require(noise_.sigma >= 0.0 && std::isfinite(noise_.sigma), "noise level must be finite and nonnegative");
  if (noise_.kind == NoiseModel::Kind::Minibatch) {
    require(static_cast<bool>(instance_.minibatch_grad), "instance has no minibatch oracle");
  }
}

Vector StochasticOracle::sample(const Vector& x) {
  const std::uint64_t k = draws_++;
  Rng draw(seed_, (static_cast<std::uint64_t>(Stream::kOracleNoise) << 48) + k);
  switch (noise_.kind) {
    case NoiseModel::Kind::None:
      return instance_.f_grad(x);
    case NoiseModel::Kind::GaussianIso:
    case NoiseModel::Kind::GaussianPerturb:
      return instance_.f_grad(x) + draw.normal_vector(x.size(), noise_.sigma);
    case NoiseModel::Kind::Minibatch:
      return instance_.minibatch_grad(x, draw);
  }
  return instance_.f_grad(x);
}

double StochasticOracle::variance_bound(const DistanceGenerator& dgf) const {
  if (noise_.kind == NoiseModel::Kind::None) return 0.0;
  if (noise_.kind == NoiseModel::Kind::Minibatch) return std::numeric_limits<double>::quiet_NaN();
  const double s2 = noise_.sigma * noise_.sigma;
  const double d = static_cast<double>(instance_.dim);
  switch (dgf.kind()) {
    case DgfKind::SimplexEntropy:
      return 2.0 * std::log(2.0 * d) * s2;
    case DgfKind::ProductSimplexEntropy:
      return static_cast<double>(dgf.rows()) * 2.0 * std::log(2.0 * static_cast<double>(dgf.cols())) * s2;
    default:
      return d * s2;
  }
}

double StochasticOracle::subgaussian_sigma2(const DistanceGenerator&) const {
  if (noise_.kind == NoiseModel::Kind::None) return 0.0;
  if (noise_.kind == NoiseModel::Kind::Minibatch) return std::numeric_limits<double>::quiet_NaN();
  // |b|_2^2 = sigma^2 chi^2_d, and E exp(|b|^2 / s^2) <= e for
  // s^2 = c d sigma^2 with c = 2 / (1 - e^-2), uniformly in d. Every dual
  // norm used here is dominated by l2, so the same s^2 covers all of them.
  const double c = 2.0 / (1.0 - std::exp(-2.0));
  return c * static_cast<double>(instance_.dim) * noise_.sigma * noise_.sigma;
}

Vector stoch_grad(StochasticOracle& oracle, const Vector& x) { return oracle.sample(x); }

}  // namespace smd
