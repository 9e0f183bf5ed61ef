#pragma once

// Steady-state LQ and Kalman designs, estimator update and the LQG baseline.

#include "rwmpc/linalg.hpp"
#include "rwmpc/lti.hpp"

namespace rwmpc::riccati {

/// Stabilizing solution of
///   P = A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q.
/// Structured doubling, refined by Newton-Kleinman steps when the residual
/// misses 1e-8 ||P||. Throws std::invalid_argument for a non-stabilizable
/// pair or a bad R, NumericalError (with the residual) on non-convergence.
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// Spectral norm of the DARE residual.
double dare_residual(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// K = -(R + B^T P B)^{-1} B^T P A, so that u = K x.
Matrix lq_gain(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& R);

/// PBH tests over the eigenvalues with |lambda| >= 1 - tol.
bool is_stabilizable(const Matrix& A, const Matrix& B, double tol = 1e-9);
bool is_detectable(const Matrix& A, const Matrix& C, double tol = 1e-9);

/// Solves X = A^T X A + M for Schur-stable A (squared Smith iteration).
Matrix solve_stein(const Matrix& A, const Matrix& M);

struct LqDesign {
  Matrix P;
  Matrix K_LQ;
  Matrix Q_C;
  Matrix R_C;
};
LqDesign design_lq(const Matrix& A, const Matrix& B, const Matrix& Q_C, const Matrix& R_C);

/// Current-estimator gain: x(k|k) = x(k|k-1) + M_K (y(k) - C x(k|k-1)),
/// M_K = P_f C^T (C P_f C^T + R_K)^{-1} with P_f the a-priori covariance.
Matrix kalman_gain(const Matrix& A, const Matrix& C, const Matrix& Q_K, const Matrix& R_K);

struct KalmanDesign {
  Matrix M_K;
  Matrix Q_K;
  Matrix R_K;
  Matrix P_f;
};
KalmanDesign design_kalman(const Matrix& A, const Matrix& C, const Matrix& Q_K, const Matrix& R_K);

struct EstimatorState {
  Vector x_hat;
  Vector x_pred;

  static EstimatorState zero(Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }
};

/// Predict with the previously applied input, then correct with y.
/// The model's D is ignored (the control-oriented model is strictly proper).
EstimatorState kf_step(const EstimatorState& est, const Vector& u_prev, const Vector& y,
                       const lti::DiscreteModel& model, const Matrix& M_K);

/// In-place variant for the control loop; no allocation when `scratch` has
/// the state dimension.
void kf_step_inplace(EstimatorState& est, const Vector& u_prev, const Vector& y, const lti::DiscreteModel& model,
                     const Matrix& M_K, Vector& scratch);

struct LqgCommand {
  Vector u_command;
  Vector u_for_estimator;
};

/// u_command = K_LQ x_hat; with EWP the estimator receives the clipped input.
LqgCommand lqg_control(const Vector& x_hat, const Matrix& K_LQ, bool ewp, const Vector& u_min,
                       const Vector& u_max);

}  // namespace rwmpc::riccati
