#include "smd/core.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <mutex>
#include <thread>

namespace smd {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

long half_ceil(long T) { return (T + 1) / 2; }

}  // namespace

double theorem1_step(double ell, double lambda0, double sigma2, long T) {
  require(ell > 0.0 && T >= 1 && lambda0 > 0.0 && sigma2 >= 0.0, "theorem1_step: needs ell > 0, T >= 1, lambda0 > 0");
  const double cap = 1.0 / (2.0 * ell);
  if (sigma2 == 0.0) return cap;
  return std::min(cap, std::sqrt(lambda0 / (sigma2 * ell * static_cast<double>(T))));
}

double stich_schedule(double a, double d, long T, long t) {
  require(a > 0.0 && d > 0.0 && t >= 0 && t < T, "stich_schedule: needs a, d > 0 and 0 <= t < T");
  const long half = half_ceil(T);
  if (t < half && static_cast<double>(T) <= 2.0 * d / a) return 1.0 / d;
  return 1.0 / (a * (2.0 * d / a + static_cast<double>(std::max(t - half, 0L))));
}

double theorem3_schedule(double mu, double eps, double alpha, double ell, long T, long t) {
  require(mu > 0.0 && eps > 0.0 && ell > 0.0 && alpha >= 1.0 && alpha <= 2.0,
          "theorem3_schedule: needs mu, eps, ell > 0 and alpha in [1, 2]");
  const double a = mu * std::pow(eps, (2.0 - alpha) / alpha) / 3.0;
  return stich_schedule(a, 2.0 * ell, T, t);
}

Schedule Schedule::constant(double eta) {
  require(eta > 0.0 && std::isfinite(eta), "constant schedule needs a finite eta > 0");
  return Schedule(Kind::Constant, {eta});
}

Schedule Schedule::theorem1(double ell, double lambda0, double sigma2, long T) {
  theorem1_step(ell, lambda0, sigma2, T);
  return Schedule(Kind::Theorem1, {ell, lambda0, sigma2, static_cast<double>(T)});
}

Schedule Schedule::square_summable(double eta0, double q) {
  require(eta0 > 0.0 && q > 0.5 && q <= 1.0, "square-summable schedule needs eta0 > 0 and q in (0.5, 1]");
  return Schedule(Kind::SquareSummable, {eta0, q});
}

Schedule Schedule::stich(double a, double d, long T) {
  require(a > 0.0 && d > 0.0 && T >= 1, "stich schedule needs a, d > 0 and T >= 1");
  return Schedule(Kind::Stich, {a, d, static_cast<double>(T)});
}

Schedule Schedule::theorem3(double mu, double eps, double alpha, double ell, long T) {
  require(T >= 1, "theorem3 schedule needs T >= 1");
  theorem3_schedule(mu, eps, alpha, ell, T, 0);
  return Schedule(Kind::Theorem3, {mu, eps, alpha, ell, static_cast<double>(T)});
}

double Schedule::eta(long t) const {
  const auto& p = params_;
  switch (kind_) {
    case Kind::Constant:
      return p[0];
    case Kind::Theorem1:
      return theorem1_step(p[0], p[1], p[2], static_cast<long>(p[3]));
    case Kind::SquareSummable:
      return p[0] / std::pow(static_cast<double>(t) + 1.0, p[1]);
    case Kind::Stich:
      return stich_schedule(p[0], p[1], static_cast<long>(p[2]), std::min(t, static_cast<long>(p[2]) - 1));
    case Kind::Theorem3:
      return theorem3_schedule(p[0], p[1], p[2], p[3], static_cast<long>(p[4]), std::min(t, static_cast<long>(p[4]) - 1));
  }
  return 0.0;
}

void Schedule::check_initial_step(double ell) const {
  if (!(ell > 0.0)) return;
  const double cap = 1.0 / (2.0 * ell);
  if (eta(0) > cap * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "initial step " << eta(0) << " exceeds 1/(2 ell) = " << cap;
    throw DomainError(os.str());
  }
}

std::string schedule_kind_name(Schedule::Kind kind) {
  switch (kind) {
    case Schedule::Kind::Constant:
      return "constant";
    case Schedule::Kind::Theorem1:
      return "theorem1";
    case Schedule::Kind::SquareSummable:
      return "square_summable";
    case Schedule::Kind::Stich:
      return "stich";
    case Schedule::Kind::Theorem3:
      return "theorem3";
  }
  return "";
}

std::string Schedule::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << schedule_kind_name(kind_) << "(";
  for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? "," : "") << params_[i];
  os << ")";
  return os.str();
}

long select_index(const std::vector<double>& etas, Rng& rng) {
  if (etas.empty()) return -1;
  double total = 0.0;
  for (double e : etas) total += e;
  const double target = rng.uniform() * total;
  double running = 0.0;
  for (std::size_t t = 0; t < etas.size(); ++t) {
    running += etas[t];
    if (target < running) return static_cast<long>(t);
  }
  // Round-off fallback: the last index with positive weight.
  for (std::size_t t = etas.size(); t-- > 0;)
    if (etas[t] > 0.0) return static_cast<long>(t);
  return 0;
}

const Vector& select_iterate(const RunRecord& record) { return record.selected_iterate; }

double resolve_phi_star(const CompositeInstance& instance) {
  if (instance.phi_star) return *instance.phi_star;
  return estimate_phi_star(instance, 20, 2000, 1);
}

double lyapunov_value(const Vector& x, double eta_prev, double rho, const CompositeInstance& instance,
                      const DistanceGenerator& dgf) {
  if (!instance.phi_star) throw DomainError("lyapunov_value needs a known Phi*");
  const double star = *instance.phi_star;
  const double envelope = phi_prox(x, rho, instance, dgf).objective_value;
  return eta_prev * rho * (phi_value(instance, x) - star) + envelope - star;
}

double theorem1_lambda0(const CompositeInstance& instance, const DistanceGenerator& dgf, const Vector& x0) {
  const double star = resolve_phi_star(instance);
  const double rho = 2.0 * instance.ell_for(dgf);
  const double envelope = rho > 0.0 ? phi_prox(x0, rho, instance, dgf).objective_value : phi_value(instance, x0);
  return envelope - star + phi_value(instance, x0) - star;
}

double empirical_quantile(std::vector<double> values, double q) {
  require(!values.empty() && q >= 0.0 && q <= 1.0, "empirical_quantile needs data and q in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RunRecord run_smd(const CompositeInstance& instance, const DistanceGenerator& dgf, StochasticOracle& oracle,
                  const Schedule& schedule, long T, std::uint64_t seed, const RunConfig& config) {
  require(T >= 0, "run_smd needs T >= 0");
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.seed = seed;
  rec.T = T;

  Vector x = config.x0.size() > 0 ? config.x0 : instance.x0;
  if (x.size() != instance.dim || !instance.feasible.contains(x) || !dgf.in_zone(x)) {
    throw DomainError("starting point must be feasible and inside the zone of " + dgf.name());
  }

  if (config.enforce_step_cap && T > 0) {
    double declared = 0.0;
    try {
      declared = instance.ell_for(dgf);
    } catch (const DomainError&) {
      declared = 0.0;
    }
    schedule.check_initial_step(declared);
  }
  const bool need_rho = config.bfbe || config.track_every_step;
  double bfbe_rho = config.bfbe_rho;
  if (need_rho && std::isnan(bfbe_rho)) bfbe_rho = 3.0 * instance.ell_for(dgf);
  double lyap_rho = config.lyapunov_rho;
  CompositeInstance with_star;
  if (config.lyapunov) {
    if (std::isnan(lyap_rho)) lyap_rho = 2.0 * instance.ell_for(dgf);
    with_star = instance;
    with_star.phi_star = resolve_phi_star(instance);
  }
  const double ell_plus = config.phi_plus ? instance.ell_for(dgf) : 0.0;

  rec.etas.resize(static_cast<std::size_t>(T));
  for (long t = 0; t < T; ++t) {
    rec.etas[static_cast<std::size_t>(t)] = schedule.eta(t);
    rec.sum_eta += rec.etas[static_cast<std::size_t>(t)];
    rec.sum_eta2 += rec.etas[static_cast<std::size_t>(t)] * rec.etas[static_cast<std::size_t>(t)];
  }
  if (T > 0) {
    Rng selection(seed, Stream::kIterateSelection);
    rec.selected_index = select_index(rec.etas, selection);
  }
  const long stride = config.stride > 0 ? config.stride : std::max(1L, (T + 99) / 100);
  const double ceiling = config.divergence_factor * std::max(1.0, phi_value(instance, x));

  auto checkpoint = [&](long t) {
    Checkpoint cp;
    cp.t = t;
    cp.eta = t < T ? rec.etas[static_cast<std::size_t>(t)] : (T > 0 ? rec.etas.back() : 0.0);
    cp.phi = phi_value(instance, x);
    const bool finite = std::isfinite(cp.phi) && cp.phi <= ceiling;
    if (finite) {
      if (config.bfbe) cp.bfbe = bfbe(x, bfbe_rho, instance, dgf, config.solver);
      if (config.lyapunov) {
        const double eta_prev = t == 0 ? (T > 0 ? rec.etas[0] : 0.0) : rec.etas[static_cast<std::size_t>(t - 1)];
        cp.lyapunov = lyapunov_value(x, eta_prev, lyap_rho, with_star, dgf);
      }
      if (config.phi_plus && ell_plus > 0.0) {
        cp.phi_plus = phi_value(instance, linearized_min(x, ell_plus, instance, dgf, config.solver).point);
      }
    }
    rec.checkpoints.push_back(cp);
    if (config.store_iterates) {
      rec.iterate_index.push_back(t);
      rec.iterates.push_back(x);
    }
    if (!finite) {
      rec.diverged = true;
      rec.diverged_at = t;
      rec.status = "diverged";
    }
    return finite;
  };

  double weighted = 0.0, weight = 0.0, minimum = std::numeric_limits<double>::infinity();
  long t = 0;
  try {
    for (; t < T; ++t) {
      if (t == rec.selected_index) rec.selected_iterate = x;
      if (t % stride == 0 && !checkpoint(t)) break;
      const double eta = rec.etas[static_cast<std::size_t>(t)];
      if (config.track_every_step) {
        const double d = bfbe(x, bfbe_rho, instance, dgf, config.solver);
        weighted += eta * d;
        weight += eta;
        minimum = std::min(minimum, d);
      }
      Vector g = oracle.sample(x);
      if (config.gradient_transform) g = config.gradient_transform(g);
      if (!g.allFinite()) {
        rec.diverged = true;
        rec.diverged_at = t;
        rec.status = "diverged";
        break;
      }
      Vector next = mirror_step(x, g, eta, instance, dgf, config.solver).point;
      if (!next.allFinite()) {
        rec.diverged = true;
        rec.diverged_at = t + 1;
        rec.status = "diverged";
        break;
      }
      x = std::move(next);
    }
    if (!rec.diverged) {
      if (rec.checkpoints.empty() || rec.checkpoints.back().t != T) checkpoint(T);
    }
  } catch (const SolverError& e) {
    rec.status = std::string("solver_error: ") + e.what();
  }

  if (rec.selected_iterate.size() == 0) rec.selected_iterate = x;
  rec.final_iterate = x;
  rec.final_phi = rec.diverged ? std::numeric_limits<double>::infinity() : phi_value(instance, x);
  if (config.track_every_step && weight > 0.0) {
    rec.weighted_bfbe = weighted / weight;
    rec.min_bfbe = minimum;
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunRecord run_smd(const CompositeInstance& instance, const DistanceGenerator& dgf, const NoiseModel& noise,
                  const Schedule& schedule, long T, std::uint64_t seed, const RunConfig& config) {
  StochasticOracle oracle(instance, noise, seed);
  return run_smd(instance, dgf, oracle, schedule, T, seed, config);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

ReplicaSummary replica_experiment(const CompositeInstance& instance, const DistanceGenerator& dgf,
                                  const NoiseModel& noise, const Schedule& schedule, long T,
                                  const ReplicaConfig& config) {
  require(config.replicas >= 1 && T >= 1, "replica_experiment needs replicas >= 1 and T >= 1");
  require(config.beta > 0.0 && config.beta < 1.0, "beta must lie in (0, 1)");
  const double ell = instance.ell_for(dgf);
  RunConfig run = config.run;
  run.track_every_step = true;
  run.bfbe = false;
  run.store_iterates = false;
  run.bfbe_rho = config.rho_mult * ell;

  ReplicaSummary summary;
  summary.weighted_bfbe.assign(static_cast<std::size_t>(config.replicas), 0.0);
  std::vector<RunRecord> records(static_cast<std::size_t>(config.replicas));
  parallel_for(config.replicas, config.threads, [&](int r) {
    const std::uint64_t seed = replica_seed(config.seed, static_cast<std::uint64_t>(r));
    records[static_cast<std::size_t>(r)] = run_smd(instance, dgf, noise, schedule, T, seed, run);
  });
  for (int r = 0; r < config.replicas; ++r) {
    summary.weighted_bfbe[static_cast<std::size_t>(r)] = records[static_cast<std::size_t>(r)].weighted_bfbe;
  }
  const auto& first = records.front();
  summary.sum_eta = first.sum_eta;
  summary.sum_eta2 = first.sum_eta2;
  summary.quantile = empirical_quantile(summary.weighted_bfbe, 1.0 - config.beta);

  StochasticOracle probe(instance, noise, 0);
  summary.sigma2 = probe.subgaussian_sigma2(dgf);
  const Vector x0 = run.x0.size() > 0 ? run.x0 : instance.x0;
  const double star = resolve_phi_star(instance);
  summary.lambda_tilde0 =
      3.0 * (phi_value(instance, x0) - star) + 8.0 * schedule.eta(0) * summary.sigma2 * std::log(1.0 / config.beta);
  summary.bound = (5.0 * summary.lambda_tilde0 + 60.0 * summary.sigma2 * ell * summary.sum_eta2) / (2.0 * summary.sum_eta);
  summary.within_bound = summary.quantile <= summary.bound;
  return summary;
}

}  // namespace smd
