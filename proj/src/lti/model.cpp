#include "rwmpc/lti.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace rwmpc {

double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " contains non-finite entries");
}

bool is_positive_definite(const Matrix& a) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  Eigen::LLT<Matrix> llt(symmetrize(a));
  return llt.info() == Eigen::Success;
}

bool is_positive_semidefinite(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const auto r = symmetric_eigen_range(a);
  return r.min >= -rel_tol * std::max(1.0, std::abs(r.max));
}

EigenRange symmetric_eigen_range(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

}  // namespace rwmpc

namespace rwmpc::lti {

ContinuousModel::ContinuousModel(Matrix a, Matrix b, Matrix c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  D = Matrix::Zero(C.rows(), B.cols());
  C_aux = Matrix::Zero(0, A.rows());
}

ContinuousModel::ContinuousModel(Matrix a, Matrix b, Matrix c, Matrix d, Matrix c_aux)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)), C_aux(std::move(c_aux)) {
  if (D.size() == 0) D = Matrix::Zero(C.rows(), B.cols());
  if (C_aux.size() == 0) C_aux = Matrix::Zero(0, A.rows());
}

namespace {

void check_dims(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D,
                const Matrix& C_aux) {
  if (A.rows() != A.cols()) throw std::invalid_argument("A must be square");
  if (B.rows() != A.rows()) throw std::invalid_argument("B row count must equal state dimension");
  if (C.cols() != A.rows()) throw std::invalid_argument("C column count must equal state dimension");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    throw std::invalid_argument("D must be ny x nu");
  if (C_aux.cols() != A.rows() && C_aux.rows() != 0)
    throw std::invalid_argument("C_aux column count must equal state dimension");
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(C, "C");
  require_finite(D, "D");
  require_finite(C_aux, "C_aux");
}

}  // namespace

void ContinuousModel::validate() const { check_dims(A, B, C, D, C_aux); }

void DiscreteModel::validate() const {
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw std::invalid_argument("sampling time must be positive");
  check_dims(A, B, C, D, C_aux);
}

std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

ContinuousModel transform(const ContinuousModel& m, const Matrix& T, const Matrix& T_inv) {
  ContinuousModel out;
  out.A = T_inv * m.A * T;
  out.B = T_inv * m.B;
  out.C = m.C * T;
  out.D = m.D;
  out.C_aux = m.C_aux.rows() > 0 ? Matrix(m.C_aux * T) : Matrix::Zero(0, T.cols());
  return out;
}

ContinuousModel transfer_function(std::vector<double> num, std::vector<double> den) {
  while (!den.empty() && den.front() == 0.0) den.erase(den.begin());
  if (den.empty()) throw std::invalid_argument("denominator is zero");
  const std::size_t n = den.size() - 1;
  if (num.size() > den.size()) throw std::invalid_argument("improper transfer function");
  num.insert(num.begin(), den.size() - num.size(), 0.0);

  const double lead = den.front();
  for (double& c : den) c /= lead;
  for (double& c : num) c /= lead;

  // num = d * den + remainder, remainder of degree < n
  const double d = num.front();
  std::vector<double> rem(n);
  for (std::size_t i = 0; i < n; ++i) rem[i] = num[i + 1] - d * den[i + 1];

  Matrix A = Matrix::Zero(n, n);
  Matrix B = Matrix::Zero(n, 1);
  Matrix C = Matrix::Zero(1, n);
  if (n > 0) {
    // x_1 is the highest derivative; companion form in descending order.
    for (std::size_t j = 0; j < n; ++j) A(0, j) = -den[j + 1];
    for (std::size_t i = 1; i < n; ++i) A(i, i - 1) = 1.0;
    B(0, 0) = 1.0;
    for (std::size_t j = 0; j < n; ++j) C(0, j) = rem[j];
  }
  Matrix D = Matrix::Constant(1, 1, d);
  return ContinuousModel(A, B, C, D, Matrix());
}

ContinuousModel pade_delay(double tau, int order) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("delay must be positive");
  if (order < 1) throw std::invalid_argument("Pade order must be at least 1");
  // Coefficient of (s tau)^k: (2n-k)! n! / ((2n)! k! (n-k)!)
  const int n = order;
  std::vector<double> num(n + 1), den(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double c = std::exp(std::lgamma(2.0 * n - k + 1) + std::lgamma(n + 1.0) -
                              std::lgamma(2.0 * n + 1) - std::lgamma(k + 1.0) -
                              std::lgamma(n - k + 1.0)) *
                     std::pow(tau, k);
    // descending powers: index n - k
    den[n - k] = c;
    num[n - k] = (k % 2 == 0) ? c : -c;
  }
  return transfer_function(num, den);
}

ContinuousModel first_order_lag(double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("lag time constant must be positive");
  return transfer_function({1.0}, {T, 1.0});
}

ContinuousModel series_compose(const ContinuousModel& a, const ContinuousModel& b) {
  if (a.ny() != b.nu())
    throw std::invalid_argument("series_compose: output count of first (" + std::to_string(a.ny()) +
                                ") differs from input count of second (" + std::to_string(b.nu()) + ")");
  const Index na = a.nx(), nb = b.nx();
  ContinuousModel out;
  out.A = Matrix::Zero(na + nb, na + nb);
  out.A.topLeftCorner(na, na) = a.A;
  out.A.bottomLeftCorner(nb, na) = b.B * a.C;
  out.A.bottomRightCorner(nb, nb) = b.A;
  out.B = Matrix::Zero(na + nb, a.nu());
  out.B.topRows(na) = a.B;
  out.B.bottomRows(nb) = b.B * a.D;
  out.C = Matrix::Zero(b.ny(), na + nb);
  out.C.leftCols(na) = b.D * a.C;
  out.C.rightCols(nb) = b.C;
  out.D = b.D * a.D;
  out.C_aux = Matrix::Zero(a.naux() + b.naux(), na + nb);
  if (a.naux() > 0) out.C_aux.topLeftCorner(a.naux(), na) = a.C_aux;
  if (b.naux() > 0) out.C_aux.bottomRightCorner(b.naux(), nb) = b.C_aux;
  return out;
}

ContinuousModel append(const ContinuousModel& a, const ContinuousModel& b) {
  const Index na = a.nx(), nb = b.nx();
  ContinuousModel out;
  out.A = Matrix::Zero(na + nb, na + nb);
  out.A.topLeftCorner(na, na) = a.A;
  out.A.bottomRightCorner(nb, nb) = b.A;
  out.B = Matrix::Zero(na + nb, a.nu() + b.nu());
  out.B.topLeftCorner(na, a.nu()) = a.B;
  out.B.bottomRightCorner(nb, b.nu()) = b.B;
  out.C = Matrix::Zero(a.ny() + b.ny(), na + nb);
  out.C.topLeftCorner(a.ny(), na) = a.C;
  out.C.bottomRightCorner(b.ny(), nb) = b.C;
  out.D = Matrix::Zero(a.ny() + b.ny(), a.nu() + b.nu());
  out.D.topLeftCorner(a.ny(), a.nu()) = a.D;
  out.D.bottomRightCorner(b.ny(), b.nu()) = b.D;
  out.C_aux = Matrix::Zero(a.naux() + b.naux(), na + nb);
  if (a.naux() > 0) out.C_aux.topLeftCorner(a.naux(), na) = a.C_aux;
  if (b.naux() > 0) out.C_aux.bottomRightCorner(b.naux(), nb) = b.C_aux;
  return out;
}

ContinuousModel replicate(const ContinuousModel& m, int copies) {
  if (copies < 1) throw std::invalid_argument("replicate: copies must be positive");
  ContinuousModel out = m;
  for (int i = 1; i < copies; ++i) out = append(out, m);
  return out;
}

}  // namespace rwmpc::lti
