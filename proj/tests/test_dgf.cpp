#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "smd/dgf.hpp"
#include "smd/kernels.hpp"
#include "smd/rng.hpp"

using namespace smd;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

struct Case {
  DistanceGenerator dgf;
  std::function<Vector(Rng&)> sample;
};

std::vector<Case> all_cases() {
  std::vector<Case> cases;
  cases.push_back({DistanceGenerator::euclidean(), [](Rng& r) { return r.normal_vector(5); }});
  cases.push_back({DistanceGenerator::simplex_entropy(), [](Rng& r) { return r.simplex_point(5); }});
  cases.push_back({DistanceGenerator::product_simplex_entropy(3, 4), [](Rng& r) {
                     Vector x(12);
                     for (Index s = 0; s < 3; ++s) x.segment(4 * s, 4) = r.simplex_point(4);
                     return x;
                   }});
  for (double p : {0.0, 1.0, 2.0, 3.5}) {
    cases.push_back({DistanceGenerator::poly_norm(p), [](Rng& r) { return r.normal_vector(4, 1.5); }});
  }
  return cases;
}

}  // namespace

TEST_CASE("omega values") {
  CHECK(omega_value(DistanceGenerator::euclidean(), vec({3, 4})) == doctest::Approx(12.5));
  CHECK(omega_value(DistanceGenerator::simplex_entropy(), vec({1, 0})) == 0.0);
  CHECK(omega_value(DistanceGenerator::poly_norm(1), vec({0, 2})) == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(omega_value(DistanceGenerator::simplex_entropy(), vec({-0.1, 1.1})), DomainError);
}

TEST_CASE("omega gradients") {
  const Vector e = omega_grad(DistanceGenerator::euclidean(), vec({1, 2}));
  CHECK(e[0] == 1.0);
  CHECK(e[1] == 2.0);
  const Vector p = omega_grad(DistanceGenerator::poly_norm(1), vec({0, 2}));
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(6.0));
  const Vector s = omega_grad(DistanceGenerator::simplex_entropy(), vec({std::exp(-1.0), std::exp(-1.0)}));
  CHECK(std::abs(s[0]) < 1e-15);
  CHECK(std::abs(s[1]) < 1e-15);
  CHECK_THROWS_AS(omega_grad(DistanceGenerator::simplex_entropy(), vec({1, 0})), DomainError);
}

TEST_CASE("bregman examples") {
  const auto euc = DistanceGenerator::euclidean();
  const auto ent = DistanceGenerator::simplex_entropy();
  CHECK(bregman(euc, vec({0, 0}), vec({1, 1})) == doctest::Approx(1.0));
  CHECK(bregman_sym(euc, vec({0, 0}), vec({1, 1})) == doctest::Approx(2.0));
  CHECK(bregman(ent, vec({1, 0}), vec({0.5, 0.5})) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(bregman(ent, vec({1, 0}), vec({0.5, 0.5})) ==
        doctest::Approx(oracle::kl(vec({1, 0}), vec({0.5, 0.5}))).epsilon(1e-14));
  const Vector x = vec({0.25, 0.75}), y = vec({0.5, 0.5});
  CHECK(bregman_sym(ent, x, y) == doctest::Approx(oracle::kl(x, y) + oracle::kl(y, x)).epsilon(1e-13));
  CHECK_THROWS_AS(bregman(ent, vec({0.5, 0.5}), vec({1, 0})), DomainError);
  CHECK_THROWS_AS(bregman_sym(ent, vec({1, 0}), vec({0.5, 0.5})), DomainError);
}

TEST_CASE("poly norm with p = 0 is the squared norm") {
  Rng rng(3);
  const auto dgf = DistanceGenerator::poly_norm(0.0);
  for (int k = 0; k < 20; ++k) {
    const Vector x = rng.normal_vector(6);
    CHECK(omega_value(dgf, x) == doctest::Approx(x.squaredNorm()).epsilon(1e-14));
    CHECK((omega_grad(dgf, x) - 2.0 * x).norm() <= 1e-13 * (1.0 + x.norm()));
  }
}

TEST_CASE("divergence properties on sampled points") {
  Rng rng(2024, Stream::kSampling);
  for (const auto& c : all_cases()) {
    CAPTURE(c.dgf.name());
    for (int k = 0; k < 200; ++k) {
      const Vector x = c.sample(rng), y = c.sample(rng), z = c.sample(rng);
      const double dxy = bregman(c.dgf, x, y);
      // nonnegativity and strong convexity in the primal norm
      CHECK(dxy >= 0.0);
      CHECK(dxy >= 0.5 * std::pow(c.dgf.norm(x - y), 2) * (1.0 - 1e-12));
      CHECK(bregman(c.dgf, x, x) <= 1e-12);
      // symmetry of the symmetrised divergence
      CHECK(bregman_sym(c.dgf, x, y) == doctest::Approx(bregman_sym(c.dgf, y, x)).epsilon(1e-12));
      CHECK(bregman_sym(c.dgf, x, y) >= std::pow(c.dgf.norm(x - y), 2) * (1.0 - 1e-12));
      // three-point identity
      const double lhs = dxy + bregman(c.dgf, y, z);
      const double rhs = bregman(c.dgf, x, z) + (omega_grad(c.dgf, z) - omega_grad(c.dgf, y)).dot(x - y);
      CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("gradient matches central differences") {
  Rng rng(7, Stream::kSampling);
  for (const auto& c : all_cases()) {
    CAPTURE(c.dgf.name());
    for (int k = 0; k < 20; ++k) {
      Vector x = c.sample(rng);
      if (c.dgf.kind() == DgfKind::SimplexEntropy || c.dgf.kind() == DgfKind::ProductSimplexEntropy) {
        x = x.cwiseMax(1e-3);
      }
      const Vector fd = oracle::numeric_gradient([&](const Vector& v) { return omega_value(c.dgf, v); }, x, 1e-6);
      const Vector g = omega_grad(c.dgf, x);
      CHECK((fd - g).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("dual norms pair with the primal norms") {
  Rng rng(11);
  const auto prod = DistanceGenerator::product_simplex_entropy(3, 4);
  const auto ent = DistanceGenerator::simplex_entropy();
  for (int k = 0; k < 100; ++k) {
    const Vector u = rng.normal_vector(12), v = rng.normal_vector(12);
    CHECK(std::abs(u.dot(v)) <= prod.norm(u) * prod.dual_norm(v) * (1.0 + 1e-12));
    CHECK(std::abs(u.dot(v)) <= ent.norm(u) * ent.dual_norm(v) * (1.0 + 1e-12));
  }
}

TEST_CASE("zone margin") {
  const auto ent = DistanceGenerator::simplex_entropy().with_margin(1e-12);
  CHECK_FALSE(ent.in_zone(vec({1e-13, 1.0 - 1e-13})));
  CHECK(DistanceGenerator::simplex_entropy().in_zone(vec({1e-13, 1.0 - 1e-13})));
  CHECK(ent.in_closure(vec({0.0, 1.0})));
}

TEST_CASE("growth roots") {
  CHECK(growth_root_p1(2.0) == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const double c = std::exp(rng.uniform(-20.0, 20.0));
    for (double p : {1.0, 2.0, 3.0}) {
      const double theta = growth_root(c, p);
      CHECK(std::abs(growth_root_residual(theta, c, p)) <= 1e-10 * std::max(1.0, c));
    }
    CHECK(growth_root_p1(c) == doctest::Approx(growth_root_bisection(c, 1.0)).epsilon(1e-12));
    CHECK(growth_root_p2(c) == doctest::Approx(growth_root_bisection(c, 2.0)).epsilon(1e-12));
  }
}
