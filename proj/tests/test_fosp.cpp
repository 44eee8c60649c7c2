#include "doctest.h"

#include <cmath>

#include "smd/fosp.hpp"

using namespace smd;

namespace {

CompositeInstance half_square(Index d = 1) {
  return make_quadratic_l1(Matrix::Identity(d, d), 0.0, FeasibleSet::all_space());
}

}  // namespace

TEST_CASE("measure examples") {
  const auto euc = DistanceGenerator::euclidean();
  const auto inst = half_square();
  // x^ = rho x / (rho + 1) = 0.8, Delta = 16 * 0.2^2.
  CHECK(bpm(Vector::Constant(1, 1.0), 4.0, inst, euc) == doctest::Approx(0.64).epsilon(1e-10));
  CHECK(bpm(Vector::Zero(1), 4.0, inst, euc) <= 1e-20);

  auto smooth = make_random_quadratic_l1(4, 2, false, false);
  smooth.reg = Regularizer::zero();
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vector x = rng.normal_vector(4);
    const double g2 = smooth.f_grad(x).squaredNorm();
    for (double rho : {0.5, 2.0, 7.0}) {
      CHECK(bgm(x, rho, smooth, euc) == doctest::Approx(g2).epsilon(1e-10));
      CHECK(bfbe(x, rho, smooth, euc) == doctest::Approx(g2).epsilon(1e-10));
      CHECK(2.0 * bfbe(x, rho / 2.0, smooth, euc) >= bgm(x, rho, smooth, euc));
    }
  }
  auto flat = make_quadratic_l1(Matrix::Zero(2, 2), 0.0, FeasibleSet::all_space());
  CHECK(bgm(Vector::Ones(2), 3.0, flat, euc) == 0.0);
}

TEST_CASE("gap instance closed forms") {
  const auto gap = make_bfbe_gap_instance();
  const auto euc = DistanceGenerator::euclidean();
  CHECK(gap_instance_bfbe(0.5, 2.0) == doctest::Approx(2.0));
  CHECK(bfbe(Vector::Constant(1, 0.5), 2.0, gap, euc) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(bgm(Vector::Constant(1, 0.5), 1.0, gap, euc) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(gap_instance_bfbe(0.5, 2.0) / gap_instance_bgm(0.5, 1.0) >= 2.0 / 0.5);
  for (int i = 1; i <= 10; ++i) {
    const double x = 0.1 * i;
    for (double rho : {1.0, 1.5, 2.0}) {
      CHECK(bfbe(Vector::Constant(1, x), rho, gap, euc) == doctest::Approx(gap_instance_bfbe(x, rho)).epsilon(1e-12));
      CHECK(bgm(Vector::Constant(1, x), rho, gap, euc) == doctest::Approx(gap_instance_bgm(x, rho)).epsilon(1e-12));
    }
  }
  // ratio grows like 2 rho / x as x -> 0
  double prev = 0.0;
  for (double x : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double ratio = gap_instance_bfbe(x, 2.0) / gap_instance_bgm(x, 1.0);
    CHECK(ratio >= 2.0 / x);
    CHECK(ratio == doctest::Approx(2.0 * 2.0 / x));
    CHECK(ratio > prev);
    prev = ratio;
  }
}

TEST_CASE("sandwich constant") {
  CHECK(sandwich_constant(1.0, 4.0, 1.0) == doctest::Approx(8.0));
  CHECK(sandwich_constant(2.5, 10.0, 1.0) == doctest::Approx(8.0));
  CHECK(sandwich_constant(1.0, 5.0, 1.0) == doctest::Approx(5.0));
  CHECK(sandwich_constant(1e-6, 1e3, 10.0) == doctest::Approx(11.0).epsilon(1e-6));
  CHECK_THROWS_AS(sandwich_constant(1.0, 3.0, 1.0), DomainError);
  CHECK_THROWS_AS(sandwich_constant(1.0, 10.0, 0.0), DomainError);
}

TEST_CASE("sandwich holds on random instances") {
  const auto euc = DistanceGenerator::euclidean();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = make_random_quadratic_l1(1 + seed % 6, seed, seed % 3 != 0, false);
    const double ell = inst.ell_for(euc);
    const auto report = verify_lemma1(inst, euc, 20, ell, 4.0 * ell, 1.0, seed);
    CHECK(report.samples == 20);
    CHECK(report.violations == 0);
    CHECK(report.max_ratio <= 8.0);
  }
  CHECK_THROWS_AS(verify_lemma1(make_random_simplex_quadratic(3, 1), DistanceGenerator::simplex_entropy(), 5, 1.0,
                                4.0, 1.0, 1),
                  DomainError);
}

TEST_CASE("BFBE dominance over sampled points") {
  struct Setup {
    CompositeInstance inst;
    DistanceGenerator dgf;
  };
  std::vector<Setup> setups = {
      {make_bfbe_gap_instance(), DistanceGenerator::euclidean()},
      {make_random_quadratic_l1(5, 3, true, false), DistanceGenerator::euclidean()},
      {make_random_quadratic_l1(5, 4, false, false), DistanceGenerator::poly_norm(1.0)},
      {make_random_simplex_quadratic(6, 5), DistanceGenerator::simplex_entropy()},
      {make_random_simplex_quadratic(6, 5), DistanceGenerator::euclidean()},
  };
  for (const auto& s : setups) {
    const double ell = s.inst.ell_for(s.dgf);
    for (double mult : {0.5, 1.0, 3.0}) {
      const auto report = verify_lemma2(s.inst, s.dgf, 50, std::max(mult * ell, 0.1), 11);
      CHECK(report.violations == 0);
    }
  }
}

TEST_CASE("proximal and gradient points are close") {
  Rng rng(4, Stream::kSampling);
  struct Setup {
    CompositeInstance inst;
    DistanceGenerator dgf;
  };
  std::vector<Setup> setups = {
      {make_random_quadratic_l1(4, 8, true, false), DistanceGenerator::euclidean()},
      {make_random_simplex_quadratic(5, 9), DistanceGenerator::simplex_entropy()},
      {make_random_simplex_quadratic(5, 9), DistanceGenerator::euclidean()},
  };
  for (const auto& s : setups) {
    const double ell = s.inst.ell_for(s.dgf);
    for (int k = 0; k < 30; ++k) {
      const Vector x = sample_feasible_point(s.inst, rng);
      for (double mult : {2.0, 4.0}) {
        const double rho = mult * ell;
        const auto rep = stationarity(x, rho, s.inst, s.dgf);
        const double lhs = prox_gradient_distance(x, rho, s.inst, s.dgf);
        CHECK(lhs <= ell / (rho - ell) * (rep.bpm + rep.bgm) + 1e-9);
        CHECK(rep.bpm >= -1e-9);
        CHECK(rep.bgm >= -1e-9);
        CHECK(rep.bfbe >= -1e-9);
        // monotone in rho in the Euclidean geometry; the entropic envelope
        // gap is not (its expansion in 1/rho carries the third cumulant)
        if (s.dgf.kind() == DgfKind::Euclidean) CHECK(bfbe(x, 0.5 * rho, s.inst, s.dgf) <= rep.bfbe + 1e-12);
      }
    }
  }
}

TEST_CASE("Frank-Wolfe gap is controlled by the gradient mapping") {
  Rng rng(5, Stream::kSampling);
  const auto euc = DistanceGenerator::euclidean();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto box = make_random_quadratic_l1(4, seed, true, false);
    box.reg = Regularizer::zero();
    const auto simplex = make_random_simplex_quadratic(5, seed);
    for (const CompositeInstance* inst : {static_cast<const CompositeInstance*>(&box), &simplex}) {
      for (int k = 0; k < 20; ++k) {
        const Vector x = sample_feasible_point(*inst, rng);
        for (double rho : {0.5, 2.0, 10.0}) {
          const double rhs = (inst->feasible.diameter() + inst->f_grad(x).norm() / rho) * std::sqrt(bgm(x, rho, *inst, euc));
          CHECK(frank_wolfe_gap(x, *inst) <= rhs + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("zero measures mean stationarity") {
  const auto euc = DistanceGenerator::euclidean();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = make_random_quadratic_l1(1, seed, true, true);
    // recover a minimiser by a fine grid on the box, then polish with prox steps
    Vector x = inst.x0;
    const double ell = std::max(inst.ell_for(euc), 1e-3);
    for (int it = 0; it < 20000; ++it) x = euclidean_prox(inst, x - inst.f_grad(x) / ell, 1.0 / ell);
    const auto rep = stationarity(x, 2.0 * ell, inst, euc);
    if (rep.bfbe < 1e-10 || rep.bgm < 1e-10 || rep.bpm < 1e-10) {
      CHECK(stationarity_residual(x, inst) <= 1e-5);
    }
  }
}
