#include "smd/rl.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "smd/fosp.hpp"
#include "smd/kernels.hpp"

namespace smd {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

bool is_distribution(const Vector& v, Index n) {
  return v.size() == n && v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) <= 1e-12;
}

Matrix policy_transition(const TabularDMDP& mdp, const Policy& pi) {
  Matrix p = Matrix::Zero(mdp.S, mdp.S);
  for (Index s = 0; s < mdp.S; ++s)
    for (Index a = 0; a < mdp.A; ++a) p.row(s) += pi(s, a) * mdp.P.row(s * mdp.A + a);
  return p;
}

// Greedy policy on q with ties to the lowest index.
Policy greedy(const Matrix& q) {
  Policy pi = Policy::Zero(q.rows(), q.cols());
  for (Index s = 0; s < q.rows(); ++s) {
    Index best = 0;
    for (Index a = 1; a < q.cols(); ++a) {
      if (q(s, a) > q(s, best) + 1e-12 * (1.0 + std::abs(q(s, best)))) best = a;
    }
    pi(s, best) = 1.0;
  }
  return pi;
}

Matrix as_matrix(const Vector& x, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index s = 0; s < rows; ++s)
    for (Index a = 0; a < cols; ++a) m(s, a) = x[s * cols + a];
  return m;
}

Vector as_vector(const Matrix& m) {
  Vector x(m.size());
  for (Index s = 0; s < m.rows(); ++s)
    for (Index a = 0; a < m.cols(); ++a) x[s * m.cols() + a] = m(s, a);
  return x;
}

}  // namespace

void TabularDMDP::validate() const {
  require(S >= 1 && A >= 1, "MDP needs at least one state and one action");
  require(P.rows() == S * A && P.cols() == S, "P must be (S*A) x S");
  require(R.rows() == S && R.cols() == A, "R must be S x A");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  for (Index k = 0; k < S * A; ++k) {
    require(P.row(k).minCoeff() >= 0.0 && std::abs(P.row(k).sum() - 1.0) <= 1e-12, "P rows must be distributions");
  }
  require(R.minCoeff() >= 0.0 && R.maxCoeff() <= 1.0, "rewards must lie in [0, 1]");
  require(is_distribution(p0, S), "p0 must be a distribution over states");
  require(is_distribution(mu, S) && mu.minCoeff() > 0.0, "mu must be a strictly positive distribution");
}

Policy uniform_policy(const TabularDMDP& mdp) {
  return Policy::Constant(mdp.S, mdp.A, 1.0 / static_cast<double>(mdp.A));
}

void validate_policy(const TabularDMDP& mdp, const Policy& pi, bool strictly_positive) {
  require(pi.rows() == mdp.S && pi.cols() == mdp.A, "policy shape must be S x A");
  for (Index s = 0; s < mdp.S; ++s) {
    require(pi.row(s).minCoeff() >= 0.0 && std::abs(pi.row(s).sum() - 1.0) <= 1e-9, "policy rows must be distributions");
  }
  if (strictly_positive) require(pi.minCoeff() > 0.0, "policy must be strictly positive");
}

Vector state_values(const TabularDMDP& mdp, const Policy& pi) {
  const Vector r = (pi.array() * mdp.R.array()).rowwise().sum();
  const Matrix system = Matrix::Identity(mdp.S, mdp.S) - mdp.gamma * policy_transition(mdp, pi);
  const Vector v = Eigen::PartialPivLU<Matrix>(system).solve(r);
  const double residual = (system * v - r).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10 * (1.0 + r.cwiseAbs().maxCoeff()) / (1.0 - mdp.gamma))) {
    throw SolverError("policy evaluation solve failed", residual);
  }
  return v;
}

Matrix q_values(const TabularDMDP& mdp, const Policy& pi) {
  const Vector v = state_values(mdp, pi);
  const Vector next = mdp.P * v;
  Matrix q(mdp.S, mdp.A);
  for (Index s = 0; s < mdp.S; ++s)
    for (Index a = 0; a < mdp.A; ++a) q(s, a) = mdp.R(s, a) + mdp.gamma * next[s * mdp.A + a];
  return q;
}

Vector occupancy(const TabularDMDP& mdp, const Policy& pi, const Vector& dist) {
  // d' = (1 - gamma) dist' (I - gamma P_pi)^-1
  const Matrix system = Matrix::Identity(mdp.S, mdp.S) - mdp.gamma * policy_transition(mdp, pi);
  const Vector d = system.transpose().partialPivLu().solve(dist);
  return (1.0 - mdp.gamma) * d;
}

double exact_value(const TabularDMDP& mdp, const Policy& pi, const Vector& dist) {
  return dist.dot(state_values(mdp, pi));
}

double objective(const TabularDMDP& mdp, const Policy& pi, const Vector& dist) { return -exact_value(mdp, pi, dist); }

Matrix exact_policy_gradient(const TabularDMDP& mdp, const Policy& pi, const Vector& mu) {
  const Matrix q = q_values(mdp, pi);
  const Vector d = occupancy(mdp, pi, mu);
  return -(d.asDiagonal() * q) / (1.0 - mdp.gamma);
}

int default_horizon(double gamma) {
  if (gamma <= 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(1e-3 * (1.0 - gamma)) / std::log(gamma))));
}

SampledGradient sampled_policy_gradient(const TabularDMDP& mdp, const Policy& pi, const Vector& mu, int horizon,
                                        int batch, std::uint64_t seed) {
  require(horizon >= 1 && batch >= 1, "sampled gradient needs horizon >= 1 and batch >= 1");
  validate_policy(mdp, pi, true);
  auto draw = [](const auto& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    const Index n = probs.size();
    for (Index i = 0; i < n; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    // Round-off: the last index with positive mass.
    for (Index i = n - 1; i > 0; --i)
      if (probs[i] > 0.0) return i;
    return Index{0};
  };

  SampledGradient out;
  out.horizon = horizon;
  out.batch = batch;
  std::vector<Matrix> episodes(static_cast<std::size_t>(batch));
  std::vector<Index> states(static_cast<std::size_t>(horizon)), actions(static_cast<std::size_t>(horizon));
  std::vector<double> rewards(static_cast<std::size_t>(horizon));
  for (int e = 0; e < batch; ++e) {
    Rng rng(replica_seed(seed, static_cast<std::uint64_t>(e)), Stream::kEpisodes);
    Index s = draw(mu, rng);
    for (int h = 0; h < horizon; ++h) {
      const Index a = draw(pi.row(s), rng);
      states[h] = s, actions[h] = a, rewards[h] = mdp.R(s, a);
      s = draw(mdp.P.row(s * mdp.A + a), rng);
    }
    Matrix g = Matrix::Zero(mdp.S, mdp.A);
    double ret = 0.0;
    for (int h = horizon - 1; h >= 0; --h) {
      ret = rewards[h] + mdp.gamma * ret;
      g(states[h], actions[h]) += std::pow(mdp.gamma, h) * ret / pi(states[h], actions[h]);
    }
    // Minimisation sign.
    episodes[static_cast<std::size_t>(e)] = -g;
  }
  out.grad = Matrix::Zero(mdp.S, mdp.A);
  for (const auto& g : episodes) out.grad += g;
  out.grad /= static_cast<double>(batch);
  for (const auto& g : episodes) {
    const Matrix diff = g - out.grad;
    out.var_frobenius += diff.squaredNorm();
    const double n2inf = norm_2inf(diff);
    out.var_2inf += n2inf * n2inf;
  }
  out.var_frobenius /= static_cast<double>(batch);
  out.var_2inf /= static_cast<double>(batch);
  return out;
}

Policy pspg_step(const Policy& pi, const Matrix& grad, double eta) {
  return project_rows_to_simplex(Matrix(pi - eta * grad));
}

Policy smpg_step(const Policy& pi, const Matrix& grad, double eta) { return entropy_step_rows(pi, grad, eta); }

SmoothnessConstants smoothness_constants(const TabularDMDP& mdp) {
  const double c = 2.0 * mdp.gamma / std::pow(1.0 - mdp.gamma, 3);
  return {c * static_cast<double>(mdp.A), c};
}

OptimalSolution value_iteration(const TabularDMDP& mdp, double tol) {
  OptimalSolution out;
  Vector v = Vector::Zero(mdp.S);
  const int cap = 1000000;
  for (; out.iterations < cap; ++out.iterations) {
    const Vector next = mdp.P * v;
    Vector updated(mdp.S);
    for (Index s = 0; s < mdp.S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Index a = 0; a < mdp.A; ++a) best = std::max(best, mdp.R(s, a) + mdp.gamma * next[s * mdp.A + a]);
      updated[s] = best;
    }
    const double change = (updated - v).cwiseAbs().maxCoeff();
    v = updated;
    // Bellman contraction: |v - v*| <= gamma/(1-gamma) * change.
    if (change * mdp.gamma <= tol * (1.0 - mdp.gamma)) break;
  }
  // Policy iteration from the greedy policy makes the answer exact.
  Matrix q(mdp.S, mdp.A);
  auto q_of = [&](const Vector& values) {
    const Vector next = mdp.P * values;
    for (Index s = 0; s < mdp.S; ++s)
      for (Index a = 0; a < mdp.A; ++a) q(s, a) = mdp.R(s, a) + mdp.gamma * next[s * mdp.A + a];
    return q;
  };
  Policy pi = greedy(q_of(v));
  for (int k = 0; k < 1000; ++k) {
    v = state_values(mdp, pi);
    const Policy next = greedy(q_of(v));
    if (next == pi) break;
    pi = next;
  }
  out.v = v;
  out.pi = pi;
  return out;
}

DominationReport grad_domination_check(const TabularDMDP& mdp, const Policy& pi, const OptimalSolution& opt,
                                       double slack) {
  DominationReport r;
  r.gap = objective(mdp, pi, mdp.p0) + mdp.p0.dot(opt.v);
  const Matrix g = exact_policy_gradient(mdp, pi, mdp.mu);
  // Linear objective over a product of simplices: the best pi' puts each row on its smallest entry.
  r.fw_gap = (pi.array() * g.array()).sum() - g.rowwise().minCoeff().sum();
  const Vector d = occupancy(mdp, opt.pi, mdp.p0);
  r.C = (d.array() / mdp.mu.array()).maxCoeff() / (1.0 - mdp.gamma);
  r.rhs = r.C * r.fw_gap;
  r.holds = r.gap <= r.rhs + slack;
  return r;
}

DominationReport grad_domination_check(const TabularDMDP& mdp, const Policy& pi) {
  return grad_domination_check(mdp, pi, value_iteration(mdp));
}

CompositeInstance make_policy_instance(const TabularDMDP& mdp) {
  mdp.validate();
  auto m = std::make_shared<const TabularDMDP>(mdp);
  CompositeInstance inst;
  inst.name = "policy_" + mdp.name;
  inst.dim = mdp.S * mdp.A;
  inst.f_value = [m](const Vector& x) { return objective(*m, as_matrix(x, m->S, m->A), m->mu); };
  inst.f_grad = [m](const Vector& x) -> Vector {
    return as_vector(exact_policy_gradient(*m, as_matrix(x, m->S, m->A), m->mu));
  };
  inst.feasible = FeasibleSet::product_simplex(mdp.S, mdp.A);
  const auto c = smoothness_constants(mdp);
  inst.smoothness.push_back({DgfKind::Euclidean, c.L_F, "2 gamma |A| / (1 - gamma)^3"});
  inst.smoothness.push_back({DgfKind::ProductSimplexEntropy, c.L_21, "2 gamma / (1 - gamma)^3 in the (2,1) norm"});
  inst.x0 = as_vector(uniform_policy(mdp));
  const auto opt = value_iteration(mdp);
  inst.phi_star = -m->mu.dot(opt.v);
  inst.phi_star_provenance = "exact (value iteration + policy iteration)";
  return inst;
}

TabularDMDP make_garnet(Index S, Index A, Index branching, std::uint64_t seed, double gamma) {
  require(S >= 1 && A >= 1 && branching >= 1 && branching <= S, "garnet needs 1 <= branching <= S");
  Rng rng(seed, Stream::kData);
  TabularDMDP mdp;
  std::ostringstream name;
  name << "garnet_" << S << "_" << A << "_" << branching << "_" << seed;
  mdp.name = name.str();
  mdp.S = S, mdp.A = A, mdp.gamma = gamma;
  mdp.P = Matrix::Zero(S * A, S);
  mdp.R.resize(S, A);
  std::vector<Index> order(static_cast<std::size_t>(S));
  for (Index k = 0; k < S * A; ++k) {
    for (Index i = 0; i < S; ++i) order[i] = i;
    // Partial Fisher-Yates for the first `branching` targets.
    for (Index i = 0; i < branching; ++i) std::swap(order[i], order[i + static_cast<Index>(rng.index(static_cast<std::uint64_t>(S - i)))]);
    double total = 0.0;
    for (Index i = 0; i < branching; ++i) {
      const double w = rng.exponential();
      mdp.P(k, order[i]) = w;
      total += w;
    }
    mdp.P.row(k) /= total;
    mdp.P(k, order[0]) += 1.0 - mdp.P.row(k).sum();
  }
  for (Index s = 0; s < S; ++s)
    for (Index a = 0; a < A; ++a) mdp.R(s, a) = rng.uniform();
  mdp.p0 = Vector::Constant(S, 1.0 / static_cast<double>(S));
  mdp.mu = mdp.p0;
  mdp.validate();
  return mdp;
}

TabularDMDP make_gridworld(double gamma, double slip) {
  require(slip >= 0.0 && slip <= 1.0, "slip must lie in [0, 1]");
  // 5 x 5 interior, walls on row 2 and column 2 with four doorways.
  constexpr int n = 5;
  auto wall = [](int r, int c) {
    if (r == 2) return !(c == 0 || c == 4);
    if (c == 2) return !(r == 0 || r == 4);
    return false;
  };
  std::vector<int> id(n * n, -1);
  Index S = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (!wall(r, c)) id[r * n + c] = static_cast<int>(S++);
  const int goal = id[(n - 1) * n + (n - 1)];

  TabularDMDP mdp;
  mdp.name = "gridworld";
  mdp.S = S, mdp.A = 4, mdp.gamma = gamma;
  mdp.P = Matrix::Zero(S * 4, S);
  mdp.R = Matrix::Zero(S, 4);
  const int dr[4] = {-1, 0, 1, 0}, dc[4] = {0, 1, 0, -1};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int s = id[r * n + c];
      if (s < 0) continue;
      for (int a = 0; a < 4; ++a) {
        const Index row = static_cast<Index>(s) * 4 + a;
        if (s == goal) {
          mdp.P(row, s) = 1.0;
          mdp.R(s, a) = 1.0;
          continue;
        }
        for (int m = 0; m < 4; ++m) {
          const double prob = (m == a ? 1.0 - slip : 0.0) + slip / 4.0;
          const int nr = r + dr[m], nc = c + dc[m];
          const bool blocked = nr < 0 || nr >= n || nc < 0 || nc >= n || id[nr * n + nc] < 0;
          mdp.P(row, blocked ? s : id[nr * n + nc]) += prob;
        }
      }
    }
  }
  mdp.p0 = Vector::Constant(S, 1.0 / static_cast<double>(S));
  mdp.mu = mdp.p0;
  mdp.validate();
  return mdp;
}

TabularDMDP make_mdp(const std::string& spec, double gamma) {
  if (spec == "gridworld") return make_gridworld(gamma);
  const std::string prefix = "garnet:";
  if (spec.rfind(prefix, 0) == 0) {
    std::vector<long long> parts;
    std::stringstream ss(spec.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        parts.push_back(std::stoll(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad garnet field '" + item + "'");
      }
    }
    if (parts.size() == 4 && parts[0] > 0 && parts[1] > 0 && parts[2] > 0 && parts[3] >= 0) {
      return make_garnet(parts[0], parts[1], parts[2], static_cast<std::uint64_t>(parts[3]), gamma);
    }
  }
  throw std::invalid_argument("mdp must be 'gridworld' or 'garnet:S,A,b,seed', got '" + spec + "'");
}

std::string policy_algo_name(PolicyAlgo algo) { return algo == PolicyAlgo::PSPG ? "pspg" : "smpg"; }

PolicyAlgo parse_policy_algo(const std::string& name) {
  if (name == "pspg") return PolicyAlgo::PSPG;
  if (name == "smpg") return PolicyAlgo::SMPG;
  throw std::invalid_argument("algo must be pspg or smpg, got '" + name + "'");
}

PolicyRunResult run_policy_optimization(const TabularDMDP& mdp, PolicyAlgo algo, const PolicyRunConfig& config) {
  mdp.validate();
  require(config.T >= 1, "T must be at least 1");
  const auto consts = smoothness_constants(mdp);
  const double L = algo == PolicyAlgo::PSPG ? consts.L_F : consts.L_21;
  PolicyRunResult out;
  out.eta = std::isnan(config.eta) ? (L > 0.0 ? 1.0 / (2.0 * L) : 1.0) : config.eta;
  require(out.eta > 0.0, "step size must be positive");
  const auto opt = value_iteration(mdp);
  out.v_star = -mdp.p0.dot(opt.v);
  const long stride = config.stride > 0 ? config.stride : std::max(1L, (config.T + 99) / 100);
  const int horizon = config.horizon > 0 ? config.horizon : default_horizon(mdp.gamma);

  std::optional<CompositeInstance> inst;
  std::optional<DistanceGenerator> dgf;
  if (config.bfbe && L > 0.0) {
    inst = make_policy_instance(mdp);
    dgf = algo == PolicyAlgo::PSPG ? DistanceGenerator::euclidean()
                                   : DistanceGenerator::product_simplex_entropy(mdp.S, mdp.A);
  }

  Policy pi = uniform_policy(mdp);
  out.min_entry = pi.minCoeff();
  for (long t = 0; t <= config.T; ++t) {
    const double value = objective(mdp, pi, mdp.p0);
    const double gap = value - out.v_star;
    if (out.hit < 0 && !std::isnan(config.target) && gap <= config.target) out.hit = t;
    const bool last = t == config.T || out.hit == t;
    Matrix grad;
    PolicyRow row{t, value, gap};
    if (t < config.T && !last) {
      if (config.batch > 0) {
        const auto est = sampled_policy_gradient(mdp, pi, mdp.mu, horizon, config.batch,
                                                 replica_seed(config.seed, static_cast<std::uint64_t>(t)));
        grad = est.grad;
        row.var_frobenius = est.var_frobenius;
        row.var_2inf = est.var_2inf;
      } else {
        grad = exact_policy_gradient(mdp, pi, mdp.mu);
      }
    }
    if (t % stride == 0 || last) {
      if (inst) row.bfbe = bfbe(as_vector(pi), 3.0 * L, *inst, *dgf);
      out.rows.push_back(row);
    }
    if (last) break;
    pi = algo == PolicyAlgo::PSPG ? pspg_step(pi, grad, out.eta) : smpg_step(pi, grad, out.eta);
    out.min_entry = std::min(out.min_entry, pi.minCoeff());
  }
  out.final_policy = pi;
  return out;
}

}  // namespace smd
