#include "smd/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <memory>
#include <numeric>
#include <sstream>

namespace smd {

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || n < 1 || !(G > 0.0) || !(c2 > 0.0) || !(c1 > 0.0)) {
    throw std::invalid_argument("privacy budget needs eps > 0, 0 < delta < 1, n >= 1, G > 0, c1, c2 > 0");
  }
}

double calibrate_sigma(const PrivacyBudget& budget, long T) {
  budget.validate();
  if (T < 1) throw std::invalid_argument("calibrate_sigma needs T >= 1");
  const double n = static_cast<double>(budget.n);
  return budget.c2 * budget.G * budget.G * static_cast<double>(T) * std::log(1.0 / budget.delta) /
         (n * n * budget.epsilon * budget.epsilon);
}

std::vector<std::string> calibration_notes(const PrivacyBudget& budget, long T) {
  std::vector<std::string> notes;
  notes.emplace_back(
      "accountant constants c1, c2 are unspecified absolute constants; this run demonstrates utility scaling, "
      "not a certified privacy guarantee");
  if (budget.epsilon > budget.c1 * static_cast<double>(T)) {
    std::ostringstream os;
    os << "epsilon exceeds c1*T (" << budget.epsilon << " > " << budget.c1 * static_cast<double>(T)
       << "); the calibration rule is outside its stated range";
    notes.push_back(os.str());
  }
  return notes;
}

std::string dp_geometry_name(DpGeometry geometry) {
  return geometry == DpGeometry::Euclidean ? "euclidean" : "entropy";
}

namespace {

DistanceGenerator geometry_for(DpGeometry geometry, const CompositeInstance& instance) {
  if (geometry == DpGeometry::Euclidean) return DistanceGenerator::euclidean();
  if (instance.feasible.kind() == FeasibleSet::Kind::ProductSimplex) {
    return DistanceGenerator::product_simplex_entropy(instance.feasible.rows(), instance.feasible.cols());
  }
  return DistanceGenerator::simplex_entropy();
}

}  // namespace

DpRunResult dp_run(DpGeometry geometry, const CompositeInstance& instance, const PrivacyBudget& budget, long T,
                   std::uint64_t seed, const RunConfig& config) {
  const DistanceGenerator dgf = geometry_for(geometry, instance);
  DpRunResult result;
  result.sigma2 = calibrate_sigma(budget, T);
  result.ell = instance.ell_for(dgf);
  result.notes = calibration_notes(budget, T);

  Rng probe(seed, Stream::kSampling);
  for (int k = 0; k < 200; ++k) {
    result.sampled_gradient_bound =
        std::max(result.sampled_gradient_bound, instance.f_grad(sample_feasible_point(instance, probe)).norm());
  }
  if (result.sampled_gradient_bound > budget.G) {
    std::ostringstream os;
    os << "sampled gradient norm " << result.sampled_gradient_bound << " exceeds G = " << budget.G;
    result.notes.push_back(os.str());
  }

  RunConfig run = config;
  run.track_every_step = true;
  run.bfbe_rho = 5.0 * result.ell;
  const double eta = result.ell > 0.0 ? 1.0 / (2.0 * result.ell) : 1.0;
  const auto noise = result.sigma2 > 0.0 ? NoiseModel::gaussian_perturb(std::sqrt(result.sigma2)) : NoiseModel::none();
  result.record = run_smd(instance, dgf, noise, Schedule::constant(eta), T, seed, run);
  result.weighted_bfbe = result.record.weighted_bfbe;
  return result;
}

CompositeInstance make_dp_simplex_instance(Index dim, std::uint64_t seed, double linear_scale) {
  Rng rng(seed, Stream::kData);
  Vector q(dim);
  for (Index i = 0; i < dim; ++i) q[i] = linear_scale * rng.uniform(-1.0, 1.0) / std::sqrt(static_cast<double>(dim));
  CompositeInstance inst = make_simplex_quadratic(Matrix::Identity(dim, dim), q);
  inst.name = "dp_simplex_quadratic";
  if (!inst.phi_star) {
    // Strongly convex: the minimiser is the projection of -q.
    const Vector star = simplex_project(Vector(-q));
    inst.phi_star = inst.f_value(star);
    inst.phi_star_provenance = "exact (projection of -q onto the simplex)";
  }
  return inst;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman needs two equal series of length >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

ScanSummary dimension_scan(const std::vector<Index>& dims, const PrivacyBudget& budget, long T, int replicas,
                           std::uint64_t seed, double beta, int threads, const std::vector<DpGeometry>& geometries) {
  if (dims.empty() || replicas < 1 || geometries.empty()) {
    throw std::invalid_argument("dimension_scan needs dims, geometries and replicas >= 1");
  }
  ScanSummary summary;
  summary.dims = dims;
  summary.sigma2 = calibrate_sigma(budget, T);
  const int cells = static_cast<int>(dims.size() * geometries.size());
  summary.rows.resize(static_cast<std::size_t>(cells));
  for (int c = 0; c < cells; ++c) {
    auto& row = summary.rows[static_cast<std::size_t>(c)];
    row.dim = dims[static_cast<std::size_t>(c) / geometries.size()];
    row.geometry = geometries[static_cast<std::size_t>(c) % geometries.size()];
    row.replicas.assign(static_cast<std::size_t>(replicas), 0.0);
  }

  RunConfig run;
  run.bfbe = false;
  run.store_iterates = false;
  parallel_for(cells * replicas, threads, [&](int job) {
    const int cell = job / replicas, r = job % replicas;
    auto& row = summary.rows[static_cast<std::size_t>(cell)];
    const auto inst = make_dp_simplex_instance(row.dim, seed);
    const std::uint64_t run_seed = replica_seed(seed, static_cast<std::uint64_t>(r));
    // Each job writes its own slot; sizes are fixed before the pool starts.
    row.replicas[static_cast<std::size_t>(r)] = dp_run(row.geometry, inst, budget, T, run_seed, run).weighted_bfbe;
  });
  for (auto& row : summary.rows) {
    row.mean = std::accumulate(row.replicas.begin(), row.replicas.end(), 0.0) / static_cast<double>(replicas);
    row.quantile = empirical_quantile(row.replicas, 1.0 - beta);
  }
  const auto euc = std::find(geometries.begin(), geometries.end(), DpGeometry::Euclidean);
  const auto ent = std::find(geometries.begin(), geometries.end(), DpGeometry::Entropy);
  if (euc == geometries.end() || ent == geometries.end()) return summary;
  const std::size_t g = geometries.size();
  std::vector<double> dim_values;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const double e = summary.rows[i * g + static_cast<std::size_t>(euc - geometries.begin())].mean;
    const double h = summary.rows[i * g + static_cast<std::size_t>(ent - geometries.begin())].mean;
    summary.ratio.push_back(h > 0.0 ? e / h : std::numeric_limits<double>::infinity());
    dim_values.push_back(static_cast<double>(dims[i]));
  }
  if (dims.size() >= 2) summary.spearman = spearman(dim_values, summary.ratio);
  return summary;
}

}  // namespace smd
