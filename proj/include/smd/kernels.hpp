#pragma once

// Closed-form building blocks shared by the geometries and the subproblem
// solvers. Everything here is header-only and generic over the Eigen
// expression type and scalar.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace smd {

template <typename Scalar>
Scalar soft_threshold(Scalar x, Scalar threshold) {
  const Scalar shrunk = std::abs(x) - threshold;
  if (shrunk <= Scalar(0)) return Scalar(0);
  return x >= Scalar(0) ? shrunk : -shrunk;
}

template <typename Derived>
typename Derived::PlainObject soft_threshold(const Eigen::MatrixBase<Derived>& v,
                                             typename Derived::Scalar threshold) {
  using Scalar = typename Derived::Scalar;
  return v.unaryExpr([threshold](Scalar x) { return soft_threshold(x, threshold); });
}

/// Euclidean projection onto the unit simplex {y >= 0, sum y = 1} by sorting
/// and shifting.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> simplex_project(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  std::vector<Scalar> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) sorted[i] = v(i);
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  Scalar cumulative = 0;
  Scalar shift = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[k];
    const Scalar candidate = (cumulative - Scalar(1)) / Scalar(k + 1);
    if (sorted[k] - candidate > Scalar(0)) shift = candidate;
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(v(i) - shift, Scalar(0));
  return out;
}

/// Row-wise simplex projection of a row-stochastic matrix iterate.
template <typename Derived>
typename Derived::PlainObject project_rows_to_simplex(const Eigen::MatrixBase<Derived>& m) {
  typename Derived::PlainObject out(m.rows(), m.cols());
  for (Eigen::Index s = 0; s < m.rows(); ++s) out.row(s) = simplex_project(m.row(s).transpose()).transpose();
  return out;
}

/// Lower clamp applied to entropic updates before normalisation.
inline constexpr double kEntropyFloor = 1e-300;

/// One entropic mirror step on each row: row_i * exp(-eta * g_i), normalised.
/// The exponent is shifted by its row maximum so that nothing overflows.
template <typename DerivedX, typename DerivedG>
typename DerivedX::PlainObject entropy_step_rows(const Eigen::MatrixBase<DerivedX>& x,
                                                 const Eigen::MatrixBase<DerivedG>& g,
                                                 typename DerivedX::Scalar eta) {
  using Scalar = typename DerivedX::Scalar;
  typename DerivedX::PlainObject out(x.rows(), x.cols());
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> logits(x.cols());
    for (Eigen::Index a = 0; a < x.cols(); ++a) logits(a) = std::log(x(s, a)) - eta * g(s, a);
    const Scalar top = logits.maxCoeff();
    for (Eigen::Index a = 0; a < x.cols(); ++a) {
      out(s, a) = std::max(std::exp(logits(a) - top), Scalar(kEntropyFloor));
    }
    out.row(s) /= out.row(s).sum();
  }
  return out;
}

/// Row-wise softmax of dual coordinates; the entropic mirror map inverse on
/// a product of simplices.
template <typename Derived>
typename Derived::PlainObject softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject out(logits.rows(), logits.cols());
  for (Eigen::Index s = 0; s < logits.rows(); ++s) {
    const Scalar top = logits.row(s).maxCoeff();
    for (Eigen::Index a = 0; a < logits.cols(); ++a) {
      out(s, a) = std::max(std::exp(logits(s, a) - top), Scalar(kEntropyFloor));
    }
    out.row(s) /= out.row(s).sum();
  }
  return out;
}

// Matrix norms for policies: (2,1) is sqrt(sum_s (sum_a |x_sa|)^2), and its
// dual (2,inf) is sqrt(sum_s max_a x_sa^2).
template <typename Derived>
typename Derived::Scalar norm_21(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().rowwise().sum().norm();
}

template <typename Derived>
typename Derived::Scalar norm_2inf(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().rowwise().maxCoeff().norm();
}

// Roots of theta^(p+1) + theta = c for c >= 0; theta is the norm of the
// next iterate under the polynomial-growth geometry.

template <typename Scalar>
Scalar growth_root_residual(Scalar theta, Scalar c, Scalar p) {
  return std::pow(theta, p + 1) + theta - c;
}

/// p = 1: theta^2 + theta = c, written without cancellation for small c.
template <typename Scalar>
Scalar growth_root_p1(Scalar c) {
  return Scalar(2) * c / (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * c));
}

/// Real root of the depressed cubic t^3 + P t + Q = 0 (the largest one when
/// there are three), picking the trigonometric or hyperbolic form by the
/// sign of P and the discriminant.
template <typename Scalar>
Scalar depressed_cubic_root(Scalar P, Scalar Q) {
  if (P == Scalar(0)) return std::cbrt(-Q);
  if (P > Scalar(0)) {
    const Scalar k = Scalar(2) * std::sqrt(P / Scalar(3));
    return -k * std::sinh(std::asinh(Scalar(3) * Q / (Scalar(2) * P) * std::sqrt(Scalar(3) / P)) / Scalar(3));
  }
  const Scalar disc = Scalar(4) * P * P * P + Scalar(27) * Q * Q;
  const Scalar k = Scalar(2) * std::sqrt(-P / Scalar(3));
  const Scalar arg = Scalar(3) * Q / (Scalar(2) * P) * std::sqrt(Scalar(-3) / P);
  if (disc <= Scalar(0)) {
    const Scalar clamped = std::clamp(arg, Scalar(-1), Scalar(1));
    return k * std::cos(std::acos(clamped) / Scalar(3));
  }
  const Scalar sign = Q > Scalar(0) ? Scalar(-1) : Scalar(1);
  return sign * k * std::cosh(std::acosh(std::abs(arg)) / Scalar(3));
}

/// p = 2: theta^3 + theta = c by Cardano (hyperbolic branch, P = 1 > 0).
template <typename Scalar>
Scalar growth_root_p2(Scalar c) {
  return depressed_cubic_root(Scalar(1), -c);
}

/// Bisection on [0, min(c, c^(1/(p+1)))] down to machine resolution.
template <typename Scalar>
Scalar growth_root_bisection(Scalar c, Scalar p) {
  if (c <= Scalar(0)) return Scalar(0);
  Scalar lo = 0;
  Scalar hi = std::min(c, std::pow(c, Scalar(1) / (p + Scalar(1))));
  if (growth_root_residual(hi, c, p) <= Scalar(0)) return hi;
  for (int it = 0; it < 4096; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    if (mid <= lo || mid >= hi) break;
    if (growth_root_residual(mid, c, p) > Scalar(0)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::abs(growth_root_residual(lo, c, p)) <= std::abs(growth_root_residual(hi, c, p)) ? lo : hi;
}

template <typename Scalar>
Scalar growth_root(Scalar c, Scalar p) {
  if (c <= Scalar(0)) return Scalar(0);
  if (p == Scalar(0)) return c / Scalar(2);
  if (p == Scalar(1)) return growth_root_p1(c);
  if (p == Scalar(2)) {
    const Scalar theta = growth_root_p2(c);
    assert(std::abs(theta - growth_root_bisection(c, p)) <= Scalar(1e-9) * std::max(Scalar(1), theta));
    return theta;
  }
  return growth_root_bisection(c, p);
}

}  // namespace smd
