#include "rwmpc/riccati.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace rwmpc::riccati {

namespace {

constexpr double kResidualTol = 1e-8;

bool pbh_full_rank(const Matrix& A, const Matrix& BorCt, bool rows, double tol) {
  // rows == false: rank [lambda I - A, B]; rows == true: rank [lambda I - A; C]
  const Index n = A.rows();
  if (n == 0) return true;
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in PBH test");
  const double scale = std::max(1.0, norm2(A)) + norm2(BorCt);
  for (Index i = 0; i < n; ++i) {
    const std::complex<double> l = es.eigenvalues()(i);
    if (std::abs(l) < 1.0 - tol) continue;
    ComplexMatrix M;
    ComplexMatrix shifted = -A.cast<std::complex<double>>();
    shifted.diagonal().array() += l;
    if (rows) {
      M.resize(n + BorCt.rows(), n);
      M << shifted, BorCt.cast<std::complex<double>>();
    } else {
      M.resize(n, n + BorCt.cols());
      M << shifted, BorCt.cast<std::complex<double>>();
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(M);
    if (svd.singularValues()(n - 1) <= tol * scale) return false;
  }
  return true;
}

void check_inputs(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols())
    throw std::invalid_argument("solve_dare: dimension mismatch");
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(Q, "Q");
  require_finite(R, "R");
  if (!is_positive_definite(R)) throw std::invalid_argument("solve_dare: R must be symmetric positive definite");
  if (!is_positive_semidefinite(Q)) throw std::invalid_argument("solve_dare: Q must be symmetric positive semidefinite");
}

// Newton-Kleinman step from a stabilizing P.
Matrix newton_step(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const Matrix K = lq_gain(P, A, B, R);
  const Matrix Acl = A + B * K;
  return symmetrize(solve_stein(Acl, Q + K.transpose() * R * K));
}

}  // namespace

double dare_residual(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const Matrix PA = P * A;
  const Matrix BtPA = B.transpose() * PA;
  const Matrix S = R + B.transpose() * P * B;
  const Matrix Res = A.transpose() * PA - P - BtPA.transpose() * S.ldlt().solve(BtPA) + Q;
  return norm2(Res);
}

Matrix lq_gain(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& R) {
  if (B.cols() == 0) return Matrix::Zero(0, A.cols());
  const Matrix S = symmetrize(R + B.transpose() * P * B);
  Eigen::FullPivLU<Matrix> lu(S);
  if (!lu.isInvertible()) throw std::invalid_argument("lq_gain: R + B^T P B is singular");
  return -lu.solve(B.transpose() * P * A);
}

bool is_stabilizable(const Matrix& A, const Matrix& B, double tol) { return pbh_full_rank(A, B, false, tol); }

bool is_detectable(const Matrix& A, const Matrix& C, double tol) { return pbh_full_rank(A, C, true, tol); }

Matrix solve_stein(const Matrix& A, const Matrix& M) {
  if (!(spectral_radius(A) < 1.0)) throw NumericalError("solve_stein: A is not Schur stable");
  Matrix X = M;
  Matrix Ak = A;
  for (int it = 0; it < 64; ++it) {
    const Matrix inc = Ak.transpose() * X * Ak;
    X += inc;
    if (norm2(inc) <= 1e-17 * norm2(X)) return X;
    Ak = Ak * Ak;
  }
  throw NumericalError("solve_stein: squared Smith iteration did not converge");
}

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  check_inputs(A, B, Q, R);
  const Index n = A.rows();
  if (n == 0) return Matrix::Zero(0, 0);
  if (!is_stabilizable(A, B)) throw std::invalid_argument("solve_dare: (A, B) is not stabilizable");

  // Structured doubling: A_k -> 0, H_k -> P.
  Matrix Ak = A;
  Matrix G = B * R.ldlt().solve(B.transpose());
  G = symmetrize(G);
  Matrix H = symmetrize(Q);
  const Matrix I = Matrix::Identity(n, n);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Matrix> W(I + G * H);
    const Matrix WA = W.solve(Ak);        // (I + G H)^{-1} A
    const Matrix WG = W.solve(G);         // (I + G H)^{-1} G
    const Matrix H_next = symmetrize(H + Ak.transpose() * H * WA);
    G = symmetrize(G + Ak * WG * Ak.transpose());
    Ak = Ak * WA;
    if (!H_next.allFinite()) throw NumericalError("solve_dare: doubling iteration diverged");
    const double change = norm2(H_next - H);
    H = H_next;
    if (change <= 1e-15 * std::max(1.0, norm2(H))) {
      converged = true;
      break;
    }
  }
  Matrix P = H;
  double res = dare_residual(P, A, B, Q, R);
  const auto ok = [&] { return res <= kResidualTol * std::max(norm2(P), 1e-300); };
  for (int polish = 0; polish < 5 && !ok(); ++polish) {
    P = newton_step(P, A, B, Q, R);
    res = dare_residual(P, A, B, Q, R);
  }
  const double rho = spectral_radius(A + B * lq_gain(P, A, B, R));
  if (!ok() || !(rho < 1.0)) {
    std::ostringstream msg;
    msg << "solve_dare: no stabilizing solution found (residual " << res << ", closed-loop spectral radius " << rho
        << (converged ? "" : ", doubling not converged") << ")";
    throw NumericalError(msg.str());
  }
  return P;
}

LqDesign design_lq(const Matrix& A, const Matrix& B, const Matrix& Q_C, const Matrix& R_C) {
  LqDesign d;
  d.P = solve_dare(A, B, Q_C, R_C);
  d.K_LQ = lq_gain(d.P, A, B, R_C);
  d.Q_C = Q_C;
  d.R_C = R_C;
  return d;
}

Matrix kalman_gain(const Matrix& A, const Matrix& C, const Matrix& Q_K, const Matrix& R_K) {
  return design_kalman(A, C, Q_K, R_K).M_K;
}

KalmanDesign design_kalman(const Matrix& A, const Matrix& C, const Matrix& Q_K, const Matrix& R_K) {
  if (!is_positive_definite(Q_K)) throw std::invalid_argument("kalman: Q_K must be symmetric positive definite");
  if (!is_positive_definite(R_K)) throw std::invalid_argument("kalman: R_K must be symmetric positive definite");
  if (C.cols() != A.rows()) throw std::invalid_argument("kalman: dimension mismatch");
  if (!is_detectable(A, C)) throw std::invalid_argument("kalman: (A, C) is not detectable");
  KalmanDesign k;
  k.P_f = solve_dare(A.transpose(), C.transpose(), Q_K, R_K);
  const Matrix S = symmetrize(C * k.P_f * C.transpose() + R_K);
  k.M_K = S.ldlt().solve(C * k.P_f).transpose();
  k.Q_K = Q_K;
  k.R_K = R_K;
  const Index n = A.rows();
  const double rho = spectral_radius((Matrix::Identity(n, n) - k.M_K * C) * A);
  if (!(rho < 1.0)) throw NumericalError("kalman: estimator error dynamics are not stable");
  return k;
}

}  // namespace rwmpc::riccati
