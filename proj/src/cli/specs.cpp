#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "smd/cli.hpp"
#include "smd/dp.hpp"
#include "smd/rl.hpp"

namespace smd::cli {

namespace {

// "name:a,b,c" -> name and numeric fields.
std::pair<std::string, std::vector<double>> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  std::vector<double> fields;
  if (colon == std::string::npos) return {spec, fields};
  std::stringstream ss(spec.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad numeric field '" + item + "' in '" + spec + "'");
    fields.push_back(v);
  }
  return {spec.substr(0, colon), fields};
}

long long as_count(double v, const std::string& spec) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw std::invalid_argument("expected a nonnegative integer in '" + spec + "'");
  }
  return static_cast<long long>(v);
}

void expect_fields(const std::vector<double>& f, std::size_t n, const std::string& spec) {
  if (f.size() != n) throw std::invalid_argument("'" + spec + "' needs " + std::to_string(n) + " fields");
}

}  // namespace

CompositeInstance make_instance(const std::string& spec) {
  if (spec.rfind("policy:", 0) == 0) {
    std::string mdp = spec.substr(7);
    double gamma = 0.6;
    const auto at = mdp.find('@');
    if (at != std::string::npos) {
      gamma = std::stod(mdp.substr(at + 1));
      mdp = mdp.substr(0, at);
    }
    return make_policy_instance(make_mdp(mdp, gamma));
  }
  const auto [name, f] = split_spec(spec);
  if (name == "gap") {
    expect_fields(f, 0, spec);
    return make_bfbe_gap_instance();
  }
  if (name == "quadratic_l1" || name == "quadratic_l1_diag") {
    expect_fields(f, 2, spec);
    const auto d = as_count(f[0], spec);
    if (d < 1) throw std::invalid_argument("dimension must be positive in '" + spec + "'");
    return make_random_quadratic_l1(d, static_cast<std::uint64_t>(as_count(f[1], spec)), true,
                                    name == "quadratic_l1_diag");
  }
  if (name == "simplex_quadratic") {
    expect_fields(f, 2, spec);
    return make_random_simplex_quadratic(as_count(f[0], spec), static_cast<std::uint64_t>(as_count(f[1], spec)));
  }
  if (name == "dp_simplex") {
    expect_fields(f, 2, spec);
    return make_dp_simplex_instance(as_count(f[0], spec), static_cast<std::uint64_t>(as_count(f[1], spec)));
  }
  if (name == "autoencoder") {
    expect_fields(f, 4, spec);
    return make_autoencoder(as_count(f[0], spec), as_count(f[1], spec), as_count(f[2], spec),
                            static_cast<std::uint64_t>(as_count(f[3], spec)));
  }
  throw std::invalid_argument("unknown instance '" + spec + "'");
}

DistanceGenerator make_geometry(const std::string& spec, const CompositeInstance& instance) {
  const auto [name, f] = split_spec(spec);
  if (name == "euclidean" && f.empty()) return DistanceGenerator::euclidean();
  if (name == "entropy" && f.empty()) {
    if (instance.feasible.kind() == FeasibleSet::Kind::ProductSimplex) {
      return DistanceGenerator::product_simplex_entropy(instance.feasible.rows(), instance.feasible.cols());
    }
    return DistanceGenerator::simplex_entropy();
  }
  if (name == "polynorm" && f.size() == 1) return DistanceGenerator::poly_norm(f[0]);
  throw std::invalid_argument("geometry must be euclidean, entropy or polynorm:p, got '" + spec + "'");
}

NoiseModel make_noise(const std::string& spec) {
  const auto [name, f] = split_spec(spec);
  if (name == "none" && f.empty()) return NoiseModel::none();
  if (name == "minibatch" && f.empty()) return NoiseModel::minibatch();
  if (name == "gaussian" && f.size() == 1 && f[0] >= 0.0) return NoiseModel::gaussian_iso(f[0]);
  throw std::invalid_argument("noise must be none, minibatch or gaussian:sigma, got '" + spec + "'");
}

std::string sweep_method_name(SweepMethod method) {
  switch (method) {
    case SweepMethod::SGD:
      return "sgd";
    case SweepMethod::SMDr1:
      return "smdr1";
    case SweepMethod::SMDr2:
      return "smdr2";
    case SweepMethod::ClipSGD:
      return "clipsgd";
  }
  return "?";
}

SweepMethod parse_sweep_method(const std::string& name) {
  for (auto m : {SweepMethod::SGD, SweepMethod::SMDr1, SweepMethod::SMDr2, SweepMethod::ClipSGD}) {
    if (sweep_method_name(m) == name) return m;
  }
  throw std::invalid_argument("method must be sgd, smdr1, smdr2 or clipsgd, got '" + name + "'");
}

std::vector<SweepCell> step_size_sweep(const CompositeInstance& instance, const SweepOptions& options) {
  if (options.methods.empty() || options.log2_min > options.log2_max || options.T < 1) {
    throw std::invalid_argument("sweep needs methods, log2_min <= log2_max and T >= 1");
  }
  if (!(options.clip_radius > 0.0)) throw std::invalid_argument("clip radius must be positive");
  const int per_method = options.log2_max - options.log2_min + 1;
  std::vector<SweepCell> cells(options.methods.size() * static_cast<std::size_t>(per_method));
  parallel_for(static_cast<int>(cells.size()), options.threads, [&](int i) {
    SweepCell& cell = cells[static_cast<std::size_t>(i)];
    cell.method = options.methods[static_cast<std::size_t>(i / per_method)];
    cell.log2_eta = options.log2_min + i % per_method;
    cell.eta = std::ldexp(1.0, cell.log2_eta);

    RunConfig cfg;
    cfg.bfbe = false;
    cfg.store_iterates = false;
    cfg.enforce_step_cap = false;
    cfg.stride = options.T;
    DistanceGenerator dgf = DistanceGenerator::euclidean();
    if (cell.method == SweepMethod::SMDr1) dgf = DistanceGenerator::poly_norm(1.0);
    if (cell.method == SweepMethod::SMDr2) dgf = DistanceGenerator::poly_norm(2.0);
    if (cell.method == SweepMethod::ClipSGD) {
      const double radius = options.clip_radius;
      cfg.gradient_transform = [radius](const Vector& g) -> Vector {
        const double n = g.norm();
        return n > radius ? Vector(g * (radius / n)) : g;
      };
    }
    // Every cell sees the same minibatch sequence.
    const auto rec = run_smd(instance, dgf, NoiseModel::minibatch(), Schedule::constant(cell.eta), options.T,
                             options.seed, cfg);
    cell.diverged = rec.diverged;
    cell.final_loss = rec.final_phi;
  });
  return cells;
}

std::vector<int> good_step_sizes(const std::vector<SweepCell>& cells, SweepMethod method, double factor) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cells)
    if (!c.diverged && std::isfinite(c.final_loss)) best = std::min(best, c.final_loss);
  std::vector<int> good;
  for (const auto& c : cells) {
    if (c.method == method && !c.diverged && std::isfinite(c.final_loss) && c.final_loss < factor * best) {
      good.push_back(c.log2_eta);
    }
  }
  return good;
}

}  // namespace smd::cli
