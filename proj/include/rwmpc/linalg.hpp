#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace rwmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Raised when a numerical procedure fails (non-convergence, overflow,
/// loss of definiteness). Precondition violations use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

double spectral_radius(const Matrix& a);

/// Largest singular value.
double norm2(const Matrix& a);

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Throws std::invalid_argument naming `what` when `m` holds NaN/Inf.
void require_finite(const Matrix& m, const char* what);

/// Symmetric positive definite test via Cholesky.
bool is_positive_definite(const Matrix& a);

/// Symmetric positive semidefinite within `rel_tol` of the largest eigenvalue.
bool is_positive_semidefinite(const Matrix& a, double rel_tol = 1e-12);

/// Extreme eigenvalues of a symmetric matrix.
struct EigenRange {
  double min;
  double max;
};
EigenRange symmetric_eigen_range(const Matrix& a);

}  // namespace rwmpc
