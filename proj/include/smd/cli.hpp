#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "smd/core.hpp"

namespace smd::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kViolation = 1, kUsage = 2, kSolverFailure = 3 };

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Every CSV written to a path gets `<path>.meta.json` with the command and
/// its resolved config; `replay` regenerates the CSV from it.
std::string sidecar_path(const std::string& csv_path);

// ---------------------------------------------------------------------------
// Text specs used by the subcommands

/// quadratic_l1:d,seed | quadratic_l1_diag:d,seed | simplex_quadratic:d,seed |
/// gap | autoencoder:d_f,d_e,n,seed | dp_simplex:d,seed | policy:<mdp spec>
CompositeInstance make_instance(const std::string& spec);
/// euclidean | entropy | polynorm:p. Entropy on a product simplex picks the
/// product geometry.
DistanceGenerator make_geometry(const std::string& spec, const CompositeInstance& instance);
/// none | gaussian:sigma | minibatch
NoiseModel make_noise(const std::string& spec);

// ---------------------------------------------------------------------------
// Step-size sweep on the autoencoder

enum class SweepMethod { SGD, SMDr1, SMDr2, ClipSGD };
std::string sweep_method_name(SweepMethod method);
SweepMethod parse_sweep_method(const std::string& name);

struct SweepOptions {
  std::vector<SweepMethod> methods = {SweepMethod::SGD, SweepMethod::SMDr1, SweepMethod::SMDr2, SweepMethod::ClipSGD};
  int log2_min = -19;
  int log2_max = 7;
  long T = 10000;
  std::uint64_t seed = 1;
  double clip_radius = 1.0;
  int threads = 1;
};

struct SweepCell {
  SweepMethod method = SweepMethod::SGD;
  int log2_eta = 0;
  double eta = 0.0;
  double final_loss = 0.0;
  bool diverged = false;
};

/// One constant-step run per (method, eta) with minibatch gradients; rows are
/// ordered by method (as given) then eta. SGD and ClipSGD use the Euclidean
/// geometry, SMDr1/SMDr2 the polynomial geometry with p = 1, 2.
std::vector<SweepCell> step_size_sweep(const CompositeInstance& instance, const SweepOptions& options);

/// Grid exponents whose final loss is finite and below factor * (best finite
/// loss over all cells).
std::vector<int> good_step_sizes(const std::vector<SweepCell>& cells, SweepMethod method, double factor = 2.0);

}  // namespace smd::cli
