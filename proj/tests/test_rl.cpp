#include "doctest.h"

#include <cmath>

#include "smd/fosp.hpp"
#include "smd/kernels.hpp"
#include "smd/rl.hpp"

using namespace smd;

namespace {

TabularDMDP bandit(double gamma) {
  TabularDMDP m;
  m.S = 1, m.A = 2, m.gamma = gamma;
  m.P = Matrix::Ones(2, 1);
  m.R = Matrix(1, 2);
  m.R << 1.0, 0.0;
  m.p0 = m.mu = Vector::Ones(1);
  return m;
}

Policy random_policy(const TabularDMDP& m, Rng& rng, bool positive = true) {
  Policy pi(m.S, m.A);
  for (Index s = 0; s < m.S; ++s) {
    const Vector row = rng.simplex_point(m.A);
    pi.row(s) = row.transpose();
    if (positive) pi.row(s) = (0.9 * pi.row(s).array() + 0.1 / static_cast<double>(m.A)).matrix();
  }
  return pi;
}

}  // namespace

TEST_CASE("values") {
  auto m = bandit(0.5);
  m.validate();
  CHECK(exact_value(m, uniform_policy(m), m.p0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(objective(m, uniform_policy(m), m.p0) == doctest::Approx(-1.0).epsilon(1e-14));

  Rng rng(2);
  for (int k = 0; k < 5; ++k) {
    auto g = make_garnet(4, 3, 2, 10 + k, 0.0);
    const Policy pi = random_policy(g, rng);
    CHECK(exact_value(g, pi, g.p0) ==
          doctest::Approx(g.p0.dot((pi.array() * g.R.array()).rowwise().sum().matrix())).epsilon(1e-14));
    g.gamma = 0.7;
    g.R.setOnes();
    CHECK(exact_value(g, pi, g.p0) == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
    const Vector d = occupancy(g, pi, g.mu);
    CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.minCoeff() >= (1.0 - g.gamma) * g.mu.minCoeff() - 1e-15);
  }
}

TEST_CASE("validation") {
  auto m = bandit(0.5);
  m.gamma = 1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = bandit(0.5);
  m.R(0, 0) = 2.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = bandit(0.5);
  m.P(0, 0) = 0.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_mdp("garnet:3,2", 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_mdp("maze", 0.5), std::invalid_argument);
  CHECK(make_mdp("garnet:5,3,2,1", 0.5).S == 5);
  CHECK(make_mdp("gridworld", 0.5).S == 20);
}

TEST_CASE("exact gradient against finite differences") {
  Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    const Index S = 2 + static_cast<Index>(rng.index(4)), A = 2 + static_cast<Index>(rng.index(4));
    const auto m = make_garnet(S, A, std::min<Index>(S, 2), 100 + k, rng.uniform(0.1, 0.9));
    const Policy pi = random_policy(m, rng);
    const Matrix g = exact_policy_gradient(m, pi, m.mu);
    // Tangent directions: move mass between two actions of one state.
    for (Index s = 0; s < S; ++s) {
      for (Index a = 1; a < A; ++a) {
        Matrix dir = Matrix::Zero(S, A);
        dir(s, a) = 1.0, dir(s, 0) = -1.0;
        const double h = 1e-5;
        const double fd = (objective(m, pi + h * dir, m.mu) - objective(m, pi - h * dir, m.mu)) / (2 * h);
        const double exact = (g.array() * dir.array()).sum();
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("gradient special cases") {
  auto m = make_garnet(4, 3, 2, 5, 0.0);
  Rng rng(1);
  const Policy pi = random_policy(m, rng);
  const Matrix g = exact_policy_gradient(m, pi, m.mu);
  for (Index s = 0; s < 4; ++s)
    for (Index a = 0; a < 3; ++a) CHECK(g(s, a) == doctest::Approx(-m.mu[s] * m.R(s, a)).epsilon(1e-14));
  m.gamma = 0.8;
  m.R.setConstant(0.3);
  const Matrix h = exact_policy_gradient(m, pi, m.mu);
  for (Index s = 0; s < 4; ++s) CHECK(h.row(s).maxCoeff() - h.row(s).minCoeff() < 1e-12);
}

TEST_CASE("sampled gradient") {
  const auto m = make_garnet(3, 2, 2, 9, 0.5);
  Rng rng(3);
  const Policy pi = random_policy(m, rng);
  const Matrix exact = exact_policy_gradient(m, pi, m.mu);
  const auto est = sampled_policy_gradient(m, pi, m.mu, 30, 20000, 4);
  // Standard error per entry from the Frobenius variance.
  const double se = std::sqrt(est.var_frobenius / 20000.0);
  CHECK((est.grad - exact).cwiseAbs().maxCoeff() <= 4.0 * se + std::pow(0.5, 30) / 0.25);
  CHECK(est.var_2inf <= est.var_frobenius + 1e-15);

  const auto again = sampled_policy_gradient(m, pi, m.mu, 30, 50, 4);
  CHECK(again.grad == sampled_policy_gradient(m, pi, m.mu, 30, 50, 4).grad);

  TabularDMDP single;
  single.S = 2, single.A = 1, single.gamma = 0.5;
  single.P = Matrix(2, 2);
  single.P << 0, 1, 1, 0;
  single.R = Matrix(2, 1);
  single.R << 1, 0.5;
  single.p0 = single.mu = Vector::Constant(2, 0.5);
  // Deterministic start too, so every episode is the same path.
  const auto det = sampled_policy_gradient(single, Policy::Ones(2, 1), Vector::Unit(2, 0), 10, 30, 1);
  CHECK(det.var_frobenius == doctest::Approx(0.0));
  CHECK(default_horizon(0.9) == 88);
}

TEST_CASE("policy steps") {
  Policy pi(2, 2);
  pi << 0.5, 0.5, 0.2, 0.8;
  CHECK(pspg_step(pi, Matrix::Zero(2, 2), 0.3) == pi);
  CHECK((smpg_step(pi, Matrix::Zero(2, 2), 0.3) - pi).cwiseAbs().maxCoeff() < 1e-15);

  Matrix g(2, 2);
  g << std::log(2.0), 0.0, 0.0, 0.0;
  const Policy e = smpg_step(pi, g, 1.0);
  CHECK(e(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(e(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  Matrix h(2, 2);
  h << 0.2, -0.2, 0.0, 0.5;
  const Policy p = pspg_step(pi, h, 1.0);
  // Row 0: (0.3, 0.7) already on the simplex; row 1: (0.2, 0.3) shifted by 0.25.
  CHECK(p(0, 0) == doctest::Approx(0.3));
  CHECK(p(1, 0) == doctest::Approx(0.45));
  CHECK(p(1, 1) == doctest::Approx(0.55));
  const Policy v = pspg_step(pi, h, 1e6);
  CHECK(v(0, 1) == 1.0);
  CHECK(v(1, 0) == 1.0);

  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    Matrix x(3, 4), gg(3, 4);
    for (Index s = 0; s < 3; ++s) x.row(s) = rng.simplex_point(4).transpose();
    x = (0.5 * x.array() + 0.125).matrix();
    for (Index i = 0; i < x.size(); ++i) gg.data()[i] = rng.normal(0, 5);
    const Policy a = smpg_step(x, gg, rng.uniform(0.0, 3.0));
    const Policy b = pspg_step(x, gg, rng.uniform(0.0, 3.0));
    for (Index s = 0; s < 3; ++s) {
      CHECK(std::abs(a.row(s).sum() - 1.0) < 1e-12);
      CHECK(std::abs(b.row(s).sum() - 1.0) < 1e-12);
    }
    CHECK(a.minCoeff() > 0.0);
    CHECK(b.minCoeff() >= 0.0);
  }
}

TEST_CASE("smoothness constants and sampled inequalities") {
  auto m = make_garnet(3, 4, 2, 1, 0.9);
  const auto c = smoothness_constants(m);
  CHECK(c.L_F == doctest::Approx(7200.0));
  CHECK(c.L_21 == doctest::Approx(c.L_F / 4.0));
  m.gamma = 0.0;
  CHECK(smoothness_constants(m).L_F == 0.0);
  CHECK(smoothness_constants(m).L_21 == 0.0);

  Rng rng(8);
  for (int k = 0; k < 5; ++k) {
    const auto g = make_garnet(4, 3, 2, 40 + k, 0.7);
    const auto cc = smoothness_constants(g);
    for (int j = 0; j < 40; ++j) {
      const Policy a = random_policy(g, rng, false), b = random_policy(g, rng, false);
      for (const auto& dist : {g.mu, g.p0}) {
        const Matrix d = exact_policy_gradient(g, a, dist) - exact_policy_gradient(g, b, dist);
        CHECK(norm_2inf(d) <= cc.L_21 * norm_21(Matrix(a - b)) + 1e-12);
        CHECK(d.norm() <= cc.L_F * (a - b).norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("optimal policy and gradient domination") {
  const auto m = make_garnet(6, 3, 3, 2, 0.8);
  const auto opt = value_iteration(m);
  // Bellman optimality of v*.
  const Matrix q = q_values(m, opt.pi);
  CHECK((q.rowwise().maxCoeff() - opt.v).cwiseAbs().maxCoeff() < 1e-10);
  const auto at_opt = grad_domination_check(m, opt.pi, opt);
  CHECK(std::abs(at_opt.gap) < 1e-10);
  CHECK(at_opt.holds);

  Rng rng(6);
  for (int k = 0; k < 50; ++k) {
    const auto r = grad_domination_check(m, random_policy(m, rng, false), opt);
    CHECK(r.holds);
    CHECK(r.gap >= -1e-12);
    CHECK(r.C >= 1.0 / (1.0 - m.gamma) - 1e-12);
  }

  // Ties go to the lowest index.
  TabularDMDP tie;
  tie.S = 1, tie.A = 3, tie.gamma = 0.5;
  tie.P = Matrix::Ones(3, 1);
  tie.R = Matrix(1, 3);
  tie.R << 0.2, 0.7, 0.7;
  tie.p0 = tie.mu = Vector::Ones(1);
  CHECK(value_iteration(tie).pi(0, 1) == 1.0);
}

TEST_CASE("policy instance matches the tabular functions") {
  const auto m = make_gridworld();
  const auto inst = make_policy_instance(m);
  CHECK(inst.dim == 80);
  CHECK(inst.ell_for(DistanceGenerator::product_simplex_entropy(20, 4)) == smoothness_constants(m).L_21);
  CHECK(inst.ell_for(DistanceGenerator::euclidean()) == smoothness_constants(m).L_F);
  CHECK(inst.f_value(inst.x0) == doctest::Approx(objective(m, uniform_policy(m), m.mu)));
  CHECK(*inst.phi_star <= inst.f_value(inst.x0));
}

TEST_CASE("deterministic policy runs descend") {
  const auto m = make_garnet(5, 3, 2, 12, 0.6);
  for (auto algo : {PolicyAlgo::PSPG, PolicyAlgo::SMPG}) {
    PolicyRunConfig cfg;
    cfg.T = 400;
    cfg.stride = 1;
    cfg.bfbe = algo == PolicyAlgo::SMPG;
    const auto r = run_policy_optimization(m, algo, cfg);
    CHECK(r.rows.size() == 401);
    for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].value <= r.rows[i - 1].value + 1e-13);
    if (algo == PolicyAlgo::SMPG) {
      CHECK(r.min_entry > 0.0);
      CHECK(r.rows.back().bfbe < r.rows.front().bfbe);
    }
  }
  PolicyRunConfig cfg;
  cfg.T = 20;
  cfg.batch = 5;
  cfg.seed = 3;
  const auto a = run_policy_optimization(m, PolicyAlgo::SMPG, cfg);
  const auto b = run_policy_optimization(m, PolicyAlgo::SMPG, cfg);
  CHECK(a.final_policy == b.final_policy);
  CHECK(std::isfinite(a.rows.front().var_frobenius));
  CHECK(parse_policy_algo("pspg") == PolicyAlgo::PSPG);
  CHECK_THROWS_AS(parse_policy_algo("npg"), std::invalid_argument);
}
