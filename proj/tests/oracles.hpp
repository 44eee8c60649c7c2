#pragma once

// Independent reference computations for the unit and acceptance tests:
// dense grid search with local refinement, KL divergence, numeric gradients.

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "smd/types.hpp"

namespace oracle {

using smd::Index;
using smd::Vector;

inline double kl(const Vector& x, const Vector& y) {
  double total = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) total += x[i] * std::log(x[i] / y[i]);
    total += y[i] - x[i];
  }
  return total;
}

struct Min1D {
  double x;
  double f;
};

/// Grid of n points on [lo, hi], then golden-section search around the best
/// grid point. Meant for functions that are unimodal near the minimiser.
inline Min1D grid_min_1d(const std::function<double(double)>& f, double lo, double hi, int n = 20001) {
  double best_x = lo, best_f = f(lo);
  const double h = (hi - lo) / (n - 1);
  int best_i = 0;
  for (int i = 1; i < n; ++i) {
    const double x = lo + h * i;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
      best_i = i;
    }
  }
  double a = std::max(lo, lo + h * (best_i - 1));
  double b = std::min(hi, lo + h * (best_i + 1));
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  for (double x : {a, b, 0.5 * (a + b), best_x}) {
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return {best_x, best_f};
}

struct Min2D {
  std::array<double, 2> x;
  double f;
};

/// n x n grid on a rectangle, then compass search over eight directions with
/// a shrinking step. Infeasible points should return +inf.
inline Min2D grid_min_2d(const std::function<double(double, double)>& f, std::array<double, 2> lo,
                         std::array<double, 2> hi, int n = 401) {
  Min2D best{{lo[0], lo[1]}, std::numeric_limits<double>::infinity()};
  const double hx = (hi[0] - lo[0]) / (n - 1), hy = (hi[1] - lo[1]) / (n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = lo[0] + hx * i, y = lo[1] + hy * j;
      const double v = f(x, y);
      if (v < best.f) best = {{x, y}, v};
    }
  }
  double step = std::max(hx, hy);
  const double dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  while (step > 1e-14) {
    bool improved = false;
    for (const auto& d : dirs) {
      const double x = best.x[0] + step * d[0], y = best.x[1] + step * d[1];
      const double v = f(x, y);
      if (v < best.f) {
        best = {{x, y}, v};
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

}  // namespace oracle
