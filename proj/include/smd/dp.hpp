#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smd/core.hpp"

namespace smd {

/// (epsilon, delta) budget for n records with gradient l2 bound G. c1 and c2
/// are the accountant's absolute constants, which are not pinned down; the
/// defaults only fix the scaling.
struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;
  long n = 1000;
  double G = 1.0;
  double c2 = 1.0;
  double c1 = 1.0;

  void validate() const;
};

/// sigma_G^2 = c2 G^2 T log(1/delta) / (n^2 eps^2).
double calibrate_sigma(const PrivacyBudget& budget, long T);

/// Human-readable caveats about a calibration (eps > c1 T, and the
/// unspecified constants).
std::vector<std::string> calibration_notes(const PrivacyBudget& budget, long T);

enum class DpGeometry { Euclidean, Entropy };

struct DpRunResult {
  RunRecord record;
  double sigma2 = 0.0;
  double ell = 0.0;
  /// eta-weighted average of D_{5 ell}(x_t) (the run's utility measure).
  double weighted_bfbe = 0.0;
  /// Largest sampled |grad F|_2 on X, compared against G.
  double sampled_gradient_bound = 0.0;
  std::vector<std::string> notes;
};

/// Gradient-perturbed mirror descent with b_t ~ N(0, sigma_G^2 I) and
/// eta = 1/(2 ell): proximal gradient for the Euclidean geometry, the entropic
/// step for the simplex geometry.
DpRunResult dp_run(DpGeometry geometry, const CompositeInstance& instance, const PrivacyBudget& budget, long T,
                   std::uint64_t seed, const RunConfig& config = {});

/// F(x) = |x|^2 / 2 + <q, x> on the d-simplex, smooth with constant 1 in both
/// geometries, q drawn from `seed`. Gradient l2 norm is at most 1 + |q|_2.
CompositeInstance make_dp_simplex_instance(Index dim, std::uint64_t seed, double linear_scale = 0.1);

struct ScanRow {
  Index dim = 0;
  DpGeometry geometry = DpGeometry::Euclidean;
  double mean = 0.0;
  double quantile = 0.0;
  std::vector<double> replicas;
};

struct ScanSummary {
  std::vector<ScanRow> rows;
  std::vector<Index> dims;
  /// Euclidean mean / entropy mean per dimension (empty unless both
  /// geometries were scanned).
  std::vector<double> ratio;
  double spearman = 0.0;
  double sigma2 = 0.0;
};

/// Same budget, T and instance family for every dimension and geometry;
/// `replicas` seeded runs per cell. Rows are ordered by dimension, then by
/// the order of `geometries`.
ScanSummary dimension_scan(const std::vector<Index>& dims, const PrivacyBudget& budget, long T, int replicas,
                           std::uint64_t seed, double beta = 0.1, int threads = 1,
                           const std::vector<DpGeometry>& geometries = {DpGeometry::Euclidean, DpGeometry::Entropy});

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

std::string dp_geometry_name(DpGeometry geometry);

}  // namespace smd
