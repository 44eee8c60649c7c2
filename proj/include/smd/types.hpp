#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace smd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// A point handed to a geometry or instance lies outside the set where the
/// requested quantity is defined (e.g. the entropy gradient on the boundary).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative subproblem solver stopped without meeting its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline bool all_finite(const Vector& x) { return x.allFinite(); }

}  // namespace smd
