#include "detail.hpp"

#include <Eigen/Eigenvalues>

namespace rwmpc::lti::detail {

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  const Index n = A.rows();
  if (n == 0) return Matrix::Zero(0, 0);
  Eigen::ComplexSchur<ComplexMatrix> schur(A.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition failed");
  const ComplexMatrix& T = schur.matrixT();
  const ComplexMatrix& U = schur.matrixU();

  // T Y + Y T^H = -F with F = U^H Q U, back substitution from the bottom-right.
  const ComplexMatrix F = U.adjoint() * Q.cast<std::complex<double>>() * U;
  ComplexMatrix Y = ComplexMatrix::Zero(n, n);
  for (Index i = n - 1; i >= 0; --i) {
    for (Index j = n - 1; j >= 0; --j) {
      std::complex<double> rhs = -F(i, j);
      const Index ti = n - i - 1, tj = n - j - 1;
      if (ti > 0) rhs -= (T.row(i).tail(ti) * Y.col(j).tail(ti))(0, 0);
      if (tj > 0) rhs -= (Y.row(i).tail(tj) * T.row(j).tail(tj).adjoint())(0, 0);
      const std::complex<double> den = T(i, i) + std::conj(T(j, j));
      if (std::abs(den) == 0.0) throw NumericalError("Lyapunov equation is singular (eigenvalues on the axis)");
      Y(i, j) = rhs / den;
    }
  }
  const ComplexMatrix X = U * Y * U.adjoint();
  return symmetrize(X.real());
}

Matrix psd_factor(const Matrix& W) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(W));
  const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

}  // namespace rwmpc::lti::detail
