#include "detail.hpp"
#include "rwmpc/lti.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace rwmpc::lti {

namespace {

constexpr double kDefectiveCondition = 1e10;

Index count_unstable(const Matrix& A) {
  Index count = 0;
  for (const auto& l : eigenvalues(A))
    if (l.real() > 0.0) ++count;
  return count;
}

}  // namespace

// Dominant-mode retention with residualization of the discarded modes: in
// modal coordinates the fast states are replaced by their quasi-static value
// x_D = -Lambda_D^{-1} B_D u, which leaves the retained modes untouched and
// preserves the DC gain through an added feedthrough term.
ContinuousModel davison_reduce(const ContinuousModel& m, Index k) {
  m.validate();
  const Index n = m.nx();
  if (k > n) throw std::invalid_argument("davison_reduce: k exceeds the model order");
  if (k < count_unstable(m.A)) throw std::invalid_argument("davison_reduce: k is below the unstable-mode count");
  if (k == n) return m;

  const auto basis = detail::real_modal_basis(m.A);
  if (basis.condition > kDefectiveCondition)
    throw NumericalError("davison_reduce: defective eigenstructure beyond tolerance");
  if (k > 0 && basis.eigs[k - 1].imag() > 0.0)
    throw std::invalid_argument("davison_reduce: k splits a complex-conjugate pair");
  const Index d = n - k;
  for (Index i = k; i < n; ++i)
    if (!(basis.eigs[i].real() < 0.0))
      throw std::invalid_argument("davison_reduce: discarded modes must be strictly stable");

  Eigen::PartialPivLU<Matrix> lu(basis.R);
  const Matrix Bm = lu.solve(m.B);
  const Matrix Cm = m.C * basis.R;
  const Matrix L_D = basis.Lambda.bottomRightCorner(d, d);
  const Matrix X_D = -L_D.partialPivLu().solve(Bm.bottomRows(d));  // static response per unit input

  ContinuousModel out;
  out.A = basis.Lambda.topLeftCorner(k, k);
  out.B = Bm.topRows(k);
  out.C = Cm.leftCols(k);
  out.D = m.D + Cm.rightCols(d) * X_D;
  if (m.C_aux.rows() > 0) {
    // Auxiliary outputs have no feedthrough slot; only the retained modes are kept.
    out.C_aux = (m.C_aux * basis.R).leftCols(k);
  } else {
    out.C_aux = Matrix::Zero(0, k);
  }
  return out;
}

BalancedTruncation balanced_truncate(const ContinuousModel& m, Index r) {
  m.validate();
  const Index n = m.nx();
  if (r < 0 || r > n) throw std::invalid_argument("balanced_truncate: target order out of range");
  const UnstableSplit sp = split_unstable(m.A);
  const Index nu = sp.V_u.cols();
  if (r < nu) throw std::invalid_argument("balanced_truncate: target order below the unstable-mode count");
  const Index ns = n - nu;

  const Matrix P_s = sp.V_s.transpose() * (Matrix::Identity(n, n) - sp.V_u * sp.W_u);
  const Matrix A_u = sp.W_u * m.A * sp.V_u;
  const Matrix B_u = sp.W_u * m.B;
  const Matrix C_u = m.C * sp.V_u;
  const Matrix A_s = sp.V_s.transpose() * m.A * sp.V_s;
  const Matrix B_s = P_s * m.B;
  const Matrix C_s = m.C * sp.V_s;
  const bool has_aux = m.C_aux.rows() > 0;

  BalancedTruncation out;
  out.unstable_order = nu;
  if (ns == 0) {
    out.hankel_singular_values = Vector::Zero(0);
    out.model = m;
    return out;
  }

  const Matrix Wc = detail::solve_lyapunov(A_s, B_s * B_s.transpose());
  const Matrix Wo = detail::solve_lyapunov(A_s.transpose(), C_s.transpose() * C_s);
  const Matrix Lc = detail::psd_factor(Wc);
  const Matrix Lo = detail::psd_factor(Wo);
  Eigen::JacobiSVD<Matrix> svd(Lo.transpose() * Lc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.hankel_singular_values = svd.singularValues();

  if (r == n) {
    out.model = m;
    return out;
  }

  const Index rs = r - nu;
  ContinuousModel red;
  red.A = Matrix::Zero(r, r);
  red.B = Matrix::Zero(r, m.nu());
  red.C = Matrix::Zero(m.ny(), r);
  red.D = m.D;
  red.C_aux = Matrix::Zero(m.naux(), r);
  red.A.topLeftCorner(nu, nu) = A_u;
  red.B.topRows(nu) = B_u;
  red.C.leftCols(nu) = C_u;
  if (has_aux) red.C_aux.leftCols(nu) = m.C_aux * sp.V_u;

  if (rs > 0) {
    const Vector& hsv = out.hankel_singular_values;
    if (!(hsv(rs - 1) > 1e-14 * hsv(0)))
      throw NumericalError("balanced_truncate: retained Hankel singular values are numerically zero; lower the order");
    const Vector s_inv_sqrt = hsv.head(rs).cwiseSqrt().cwiseInverse();
    const Matrix Tl = s_inv_sqrt.asDiagonal() * svd.matrixU().leftCols(rs).transpose() * Lo.transpose();
    const Matrix Tr = Lc * svd.matrixV().leftCols(rs) * s_inv_sqrt.asDiagonal();
    red.A.bottomRightCorner(rs, rs) = Tl * A_s * Tr;
    red.B.bottomRows(rs) = Tl * B_s;
    red.C.rightCols(rs) = C_s * Tr;
    if (has_aux) red.C_aux.rightCols(rs) = m.C_aux * sp.V_s * Tr;
  }
  out.model = std::move(red);
  return out;
}

}  // namespace rwmpc::lti
