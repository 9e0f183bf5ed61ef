#include "detail.hpp"
#include "rwmpc/lti.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rwmpc::lti {

namespace {

constexpr double kDefectiveCondition = 1e10;

std::complex<double> normalize_phase(ComplexVector& v) {
  Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const std::complex<double> ph = v(imax) / std::abs(v(imax));
  v /= ph;
  v /= v.norm();
  return ph;
}

bool on_axis(std::complex<double> l, double tol) {
  return std::abs(l.real()) <= tol * std::max(1.0, std::abs(l));
}

}  // namespace

namespace detail {

RealModalBasis real_modal_basis(const Matrix& A) {
  const Index n = A.rows();
  RealModalBasis out;
  out.R = Matrix::Zero(n, n);
  out.Lambda = Matrix::Zero(n, n);
  if (n == 0) {
    out.condition = 1.0;
    return out;
  }
  Eigen::EigenSolver<Matrix> es(A, true);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const ComplexVector ev = es.eigenvalues();
  const ComplexMatrix V = es.eigenvectors();

  // Representatives: real eigenvalues and the Im>0 member of each pair.
  std::vector<Index> reps;
  for (Index i = 0; i < n; ++i)
    if (ev(i).imag() >= 0.0 || std::abs(ev(i).imag()) <= 1e-14 * std::abs(ev(i))) reps.push_back(i);
  auto is_real = [&](Index i) { return std::abs(ev(i).imag()) <= 1e-12 * std::max(1.0, std::abs(ev(i))); };
  std::stable_sort(reps.begin(), reps.end(), [&](Index a, Index b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
    return std::abs(ev(a).imag()) < std::abs(ev(b).imag());
  });

  Index col = 0;
  for (Index i : reps) {
    ComplexVector v = V.col(i);
    normalize_phase(v);
    if (is_real(i)) {
      if (col >= n) break;
      out.R.col(col) = v.real();
      out.R.col(col).normalize();
      out.Lambda(col, col) = ev(i).real();
      out.eigs.emplace_back(ev(i).real(), 0.0);
      ++col;
    } else {
      if (col + 2 > n) break;
      const double s = ev(i).real(), w = std::abs(ev(i).imag());
      if (ev(i).imag() < 0.0) v = v.conjugate();
      out.R.col(col) = v.real();
      out.R.col(col + 1) = v.imag();
      out.Lambda(col, col) = s;
      out.Lambda(col, col + 1) = w;
      out.Lambda(col + 1, col) = -w;
      out.Lambda(col + 1, col + 1) = s;
      out.eigs.emplace_back(s, w);
      out.eigs.emplace_back(s, -w);
      col += 2;
    }
  }
  if (col != n) throw NumericalError("could not assemble a real modal basis (unpaired complex eigenvalue)");

  Eigen::JacobiSVD<Matrix> svd(out.R);
  const Vector& sv = svd.singularValues();
  out.condition = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace detail

UnstableSplit split_unstable(const Matrix& A, double axis_tol) {
  const Index n = A.rows();
  UnstableSplit out;
  Eigen::EigenSolver<Matrix> es(A, true);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const ComplexVector ev = es.eigenvalues();
  const ComplexMatrix V = es.eigenvectors();

  std::vector<Index> reps;
  for (Index i = 0; i < n; ++i) {
    if (on_axis(ev(i), axis_tol))
      throw std::invalid_argument("eigenvalue on the imaginary axis within tolerance");
    if (ev(i).real() > 0.0) {
      out.unstable_eigs.push_back(ev(i));
      if (ev(i).imag() >= 0.0) reps.push_back(i);
    }
  }
  std::stable_sort(reps.begin(), reps.end(), [&](Index a, Index b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
    return ev(a).imag() < ev(b).imag();
  });
  const Index nu = static_cast<Index>(out.unstable_eigs.size());
  if (nu == 0) {
    out.V_u = Matrix::Zero(n, 0);
    out.W_u = Matrix::Zero(0, n);
    out.V_s = Matrix::Identity(n, n);
    return out;
  }

  Eigen::EigenSolver<Matrix> esT(A.transpose(), true);
  const ComplexVector evT = esT.eigenvalues();
  const ComplexMatrix VT = esT.eigenvectors();

  Matrix Vr(n, nu), Wr(nu, n);
  Index col = 0;
  for (Index i : reps) {
    // matching left eigenvector: eigenvector of A^T for the same eigenvalue
    Index best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < evT.size(); ++j) {
      const double d = std::abs(evT(j) - ev(i));
      if (d < dist) dist = d, best = j;
    }
    ComplexVector v = V.col(i), w = VT.col(best);
    normalize_phase(v);
    normalize_phase(w);
    const bool real = std::abs(ev(i).imag()) <= 1e-12 * std::max(1.0, std::abs(ev(i)));
    if (real) {
      Vr.col(col) = v.real();
      Wr.row(col) = w.real().transpose();
      ++col;
    } else {
      if (col + 2 > nu) throw NumericalError("unstable eigenvalues do not pair up");
      Vr.col(col) = v.real();
      Vr.col(col + 1) = v.imag();
      Wr.row(col) = w.real().transpose();
      Wr.row(col + 1) = w.imag().transpose();
      col += 2;
    }
  }
  if (col != nu) throw NumericalError("unstable eigenvalues do not pair up");

  const Matrix G = Wr * Vr;
  Eigen::FullPivLU<Matrix> lu(G);
  if (!lu.isInvertible()) throw NumericalError("defective unstable eigenstructure");
  out.V_u = Vr;
  out.W_u = lu.solve(Wr);

  Eigen::HouseholderQR<Matrix> qr(out.W_u.transpose());
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  out.V_s = Q.rightCols(n - nu);
  return out;
}

ModalModel modal_decompose(const ContinuousModel& m) {
  m.validate();
  constexpr double kAxisTol = 1e-9;
  UnstableSplit sp = split_unstable(m.A, kAxisTol);
  const Index n = m.nx();
  const Index nu_count = static_cast<Index>(sp.unstable_eigs.size());
  if (nu_count == 0) throw std::invalid_argument("no unstable pair");
  if (nu_count == 1) throw std::invalid_argument("no unstable pair (single real unstable eigenvalue)");
  if (nu_count > 2) throw std::invalid_argument("more unstable modes than supported");

  ModalModel mm;
  const auto l0 = sp.unstable_eigs[0], l1 = sp.unstable_eigs[1];
  const bool complex_pair = std::abs(l0.imag()) > 1e-12 * std::max(1.0, std::abs(l0));
  if (complex_pair) {
    mm.gamma = l0.real();
    mm.omega = std::abs(l0.imag());
    mm.unstable_block << mm.gamma, mm.omega, -mm.omega, mm.gamma;
  } else {
    const double la = std::max(l0.real(), l1.real()), lb = std::min(l0.real(), l1.real());
    Eigen::JacobiSVD<Matrix> svd(sp.V_u.colwise().normalized());
    const Vector& s = svd.singularValues();
    if (s(1) <= s(0) / kDefectiveCondition) throw NumericalError("defective eigenstructure beyond tolerance");
    mm.gamma = 0.5 * (la + lb);
    mm.omega = 0.0;
    mm.unstable_block << la, 0.0, 0.0, lb;
  }

  const Matrix P_s = sp.V_s.transpose() * (Matrix::Identity(n, n) - sp.V_u * sp.W_u);
  const Matrix A_s = sp.V_s.transpose() * m.A * sp.V_s;

  Matrix R = Matrix::Identity(n - 2, n - 2);
  Matrix R_inv = R;
  mm.Lambda_s = A_s;
  mm.stable_diagonal = false;
  if (n > 2) {
    auto basis = detail::real_modal_basis(A_s);
    for (const auto& l : basis.eigs)
      if (!(l.real() < 0.0)) throw NumericalError("stable block has an eigenvalue with non-negative real part");
    if (basis.condition <= kDefectiveCondition) {
      R = basis.R;
      R_inv = R.partialPivLu().inverse();
      mm.Lambda_s = basis.Lambda;
      mm.stable_diagonal = true;
    }
  } else {
    mm.stable_diagonal = true;
  }

  const Matrix T_s = R_inv * P_s;  // stable modal coordinates from x
  mm.T_M.resize(n, n);
  mm.T_M.topRows(2) = sp.W_u;
  mm.T_M.bottomRows(n - 2) = T_s;
  mm.T_M_inv.resize(n, n);
  mm.T_M_inv.leftCols(2) = sp.V_u;
  mm.T_M_inv.rightCols(n - 2) = sp.V_s * R;

  mm.B_u = sp.W_u * m.B;
  mm.B_s = T_s * m.B;
  mm.C_u = m.C * sp.V_u;
  mm.C_s = m.C * sp.V_s * R;
  mm.C_aux_u = m.C_aux.rows() > 0 ? Matrix(m.C_aux * sp.V_u) : Matrix::Zero(0, 2);
  mm.C_aux_s = m.C_aux.rows() > 0 ? Matrix(m.C_aux * sp.V_s * R) : Matrix::Zero(0, n - 2);
  mm.D = m.D;
  return mm;
}

ContinuousModel reassemble(const ModalModel& mm) {
  const Index ns = mm.Lambda_s.rows();
  const Index n = 2 + ns;
  ContinuousModel out;
  out.A = Matrix::Zero(n, n);
  out.A.topLeftCorner(2, 2) = mm.unstable_block;
  out.A.bottomRightCorner(ns, ns) = mm.Lambda_s;
  out.B.resize(n, mm.B_u.cols());
  out.B << mm.B_u, mm.B_s;
  out.C.resize(mm.C_u.rows(), n);
  out.C << mm.C_u, mm.C_s;
  out.D = mm.D;
  out.C_aux.resize(mm.C_aux_u.rows(), n);
  if (mm.C_aux_u.rows() > 0) out.C_aux << mm.C_aux_u, mm.C_aux_s;
  return out;
}

void align_unstable_to_outputs(ModalModel& mm) {
  const Index ny = mm.C_u.rows();
  if (ny < 2) throw std::invalid_argument("align_unstable_to_outputs requires at least two outputs");
  Matrix E = Matrix::Zero(ny, 2);
  E.topRows(2).setIdentity();

  Eigen::Matrix2d S;
  if (mm.omega != 0.0) {
    // S = a I + b J commutes with [[g, w], [-w, g]].
    Eigen::Matrix2d J;
    J << 0.0, 1.0, -1.0, 0.0;
    const Matrix CJ = mm.C_u * J;
    Matrix lhs(ny * 2, 2);
    lhs.col(0) = Eigen::Map<const Vector>(mm.C_u.data(), ny * 2);
    lhs.col(1) = Eigen::Map<const Vector>(CJ.data(), ny * 2);
    const Vector rhs = Eigen::Map<const Vector>(E.data(), ny * 2);
    const Vector ab = lhs.colPivHouseholderQr().solve(rhs);
    S = ab(0) * Eigen::Matrix2d::Identity() + ab(1) * J;
  } else {
    S.setZero();
    for (int k = 0; k < 2; ++k) {
      const double cc = mm.C_u.col(k).squaredNorm();
      S(k, k) = cc > 0.0 ? mm.C_u.col(k).dot(E.col(k)) / cc : 1.0;
    }
  }
  if (std::abs(S.determinant()) < 1e-300) throw NumericalError("unstable outputs are degenerate");
  const Eigen::Matrix2d S_inv = S.inverse();
  mm.B_u = S_inv * mm.B_u;
  mm.C_u = mm.C_u * S;
  if (mm.C_aux_u.rows() > 0) mm.C_aux_u = mm.C_aux_u * S;
  mm.T_M.topRows(2) = S_inv * mm.T_M.topRows(2);
  mm.T_M_inv.leftCols(2) = mm.T_M_inv.leftCols(2) * S;
}

}  // namespace rwmpc::lti
