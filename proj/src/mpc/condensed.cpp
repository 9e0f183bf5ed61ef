#include "rwmpc/mpc.hpp"

#include "rwmpc/riccati.hpp"

#include <sstream>

namespace rwmpc::mpc {

CondensedQp condense(const lti::DiscreteModel& model, const Matrix& Q, const Matrix& R, const Matrix& P,
                     const BlockingMap& blocking, const Vector& u_min, const Vector& u_max) {
  model.validate();
  const Index n = model.nx(), nu = model.nu();
  const int N = blocking.N();
  if (N <= 0) throw std::invalid_argument("condense: empty horizon");
  if (Q.rows() != n || Q.cols() != n || P.rows() != n || P.cols() != n || R.rows() != nu || R.cols() != nu)
    throw std::invalid_argument("condense: weight dimensions do not match the model");
  if (u_min.size() != nu || u_max.size() != nu) throw std::invalid_argument("condense: bounds must have n_u entries");
  for (Index i = 0; i < nu; ++i)
    if (!(u_min(i) < u_max(i))) throw std::invalid_argument("condense: bounds must satisfy u_min < u_max");
  if (!is_positive_definite(R)) throw std::invalid_argument("condense: R must be positive definite");
  const double res = riccati::dare_residual(P, model.A, model.B, Q, R);
  if (!(res <= 1e-8 * std::max(norm2(P), 1e-300))) {
    std::ostringstream msg;
    msg << "condense: P fails the DARE residual check (" << res << ")";
    throw std::invalid_argument(msg.str());
  }

  const Matrix& A = model.A;
  const Matrix& B = model.B;

  // Cost-to-go S_k = sum_{j >= k} (A^{j-k})^T Q_j A^{j-k} with Q_N = P.
  std::vector<Matrix> S(N + 1);
  S[N] = P;
  for (int k = N - 1; k >= 0; --k) S[k] = symmetrize(Q + A.transpose() * S[k + 1] * A);

  std::vector<Matrix> AkB(N);  // A^d B
  AkB[0] = B;
  for (int d = 1; d < N; ++d) AkB[d] = A * AkB[d - 1];
  std::vector<Matrix> SB(N);   // S_{k+1} B
  for (int k = 0; k < N; ++k) SB[k] = S[k + 1] * B;

  const int Nu = blocking.N_u();
  CondensedQp qp;
  qp.H = Matrix::Zero(nu * Nu, nu * Nu);
  qp.F = Matrix::Zero(nu * Nu, n);
  Matrix Apow = A;  // A^{i+1}
  for (int i = 0; i < N; ++i) {
    const int bi = blocking.block_of(i);
    qp.F.middleRows(bi * nu, nu) += SB[i].transpose() * Apow;
    qp.H.block(bi * nu, bi * nu, nu, nu) += B.transpose() * SB[i] + R;
    for (int j = i + 1; j < N; ++j) {
      const int bj = blocking.block_of(j);
      const Matrix blk = AkB[j - i].transpose() * SB[j];  // d^2 J / du_i du_j
      qp.H.block(bi * nu, bj * nu, nu, nu) += blk;
      qp.H.block(bj * nu, bi * nu, nu, nu) += blk.transpose();
    }
    Apow = A * Apow;
  }
  qp.H = symmetrize(qp.H);
  qp.S0 = S[0];
  qp.u_min = u_min.replicate(Nu, 1);
  qp.u_max = u_max.replicate(Nu, 1);
  qp.blocking = blocking;
  qp.nx = n;
  qp.nu = nu;
  qp.A = A;
  qp.B = B;
  qp.Q = Q;
  qp.R = R;
  qp.P = P;
  return qp;
}

void linear_term(const CondensedQp& qp, const Vector& x_hat, Vector& f_out) {
  if (x_hat.size() != qp.nx) throw std::invalid_argument("linear_term: state dimension mismatch");
  f_out.noalias() = qp.F * x_hat;
}

Vector linear_term(const CondensedQp& qp, const Vector& x_hat) {
  Vector f(qp.size());
  linear_term(qp, x_hat, f);
  return f;
}

double constant_term(const CondensedQp& qp, const Vector& x_hat) {
  if (x_hat.size() != qp.nx) throw std::invalid_argument("constant_term: state dimension mismatch");
  return 0.5 * x_hat.dot(qp.S0 * x_hat);
}

double qp_objective(const Matrix& H, const Vector& f, const Vector& u) { return 0.5 * u.dot(H * u) + f.dot(u); }

double mpc_cost(const CondensedQp& qp, const Vector& u, const Vector& x_hat) {
  if (u.size() != qp.size()) throw std::invalid_argument("mpc_cost: decision vector dimension mismatch");
  return qp_objective(qp.H, linear_term(qp, x_hat), u) + constant_term(qp, x_hat);
}

HorizonHessian::HorizonHessian(const CondensedQp& qp) : qp_(&qp) {
  if (qp.A.rows() != qp.nx || qp.B.cols() != qp.nu)
    throw std::invalid_argument("HorizonHessian: QP was not built by condense()");
  const int N = qp.blocking.N();
  X_.resize(qp.nx, N);
  U_.resize(qp.nu, N);
  lambda_.resize(qp.nx);
  tmp_.resize(qp.nx);
}

void HorizonHessian::apply(const Vector& v, Vector& out) {
  const CondensedQp& qp = *qp_;
  const int N = qp.blocking.N();
  const Index nu = qp.nu;
  for (int k = 0; k < N; ++k) U_.col(k) = v.segment(qp.blocking.block_of(k) * nu, nu);
  // x_1 = B u_0, x_{k+1} = A x_k + B u_k
  X_.col(0).noalias() = qp.B * U_.col(0);
  for (int k = 1; k < N; ++k) {
    X_.col(k).noalias() = qp.A * X_.col(k - 1);
    X_.col(k).noalias() += qp.B * U_.col(k);
  }
  out.setZero(v.size());
  // lambda_N = P x_N, lambda_k = Q x_k + A^T lambda_{k+1}; grad u_k = B^T lambda_{k+1} + R u_k
  lambda_.noalias() = qp.P * X_.col(N - 1);
  for (int k = N - 1; k >= 0; --k) {
    auto seg = out.segment(qp.blocking.block_of(k) * nu, nu);
    seg.noalias() += qp.B.transpose() * lambda_;
    seg.noalias() += qp.R * U_.col(k);
    if (k > 0) {
      tmp_.noalias() = qp.A.transpose() * lambda_;
      tmp_.noalias() += qp.Q * X_.col(k - 1);
      lambda_.swap(tmp_);
    }
  }
}

io::MatrixSet to_set(const CondensedQp& qp) {
  io::MatrixSet s;
  s.put("H", qp.H);
  s.put("F", qp.F);
  s.put("S0", qp.S0);
  s.put("u_min", qp.u_min);
  s.put("u_max", qp.u_max);
  Matrix iv(1, qp.blocking.N_u());
  for (int i = 0; i < qp.blocking.N_u(); ++i) iv(0, i) = qp.blocking.intervals()[i];
  s.put("intervals", iv);
  s.put_scalar("nu", static_cast<double>(qp.nu));
  return s;
}

CondensedQp qp_from_set(const io::MatrixSet& s) {
  CondensedQp qp;
  qp.H = s.get("H");
  qp.F = s.get("F");
  qp.S0 = s.get("S0");
  qp.u_min = s.get("u_min");
  qp.u_max = s.get("u_max");
  const Matrix& iv = s.get("intervals");
  std::vector<int> intervals;
  for (Index i = 0; i < iv.size(); ++i) intervals.push_back(static_cast<int>(iv(i)));
  qp.blocking = BlockingMap(intervals);
  qp.nu = static_cast<Index>(s.get_scalar("nu"));
  qp.nx = qp.F.cols();
  if (qp.H.rows() != qp.H.cols() || qp.H.rows() != qp.nu * qp.blocking.N_u() || qp.F.rows() != qp.H.rows() ||
      qp.u_min.size() != qp.H.rows() || qp.u_max.size() != qp.H.rows() || qp.S0.rows() != qp.nx)
    throw std::invalid_argument("QP file has inconsistent dimensions");
  return qp;
}

}  // namespace rwmpc::mpc
