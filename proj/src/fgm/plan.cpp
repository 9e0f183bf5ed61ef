#include "rwmpc/fgm.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <ostream>

namespace rwmpc::fgm {

namespace {

constexpr Index kDenseEigenLimit = 600;

// lambda_max by power iteration, lambda_min by inverse iteration on the
// Cholesky factor. Used above the dense eigensolver size limit.
EigenRange iterative_range(const Matrix& Hs) {
  const Index n = Hs.rows();
  Eigen::LLT<Matrix> llt(Hs);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("Hessian is not positive definite");
  Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  double lmax = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector y = Hs * x;
    const double next = x.dot(y);
    x = y / y.norm();
    if (std::abs(next - lmax) <= 1e-12 * next) {
      lmax = next;
      break;
    }
    lmax = next;
  }
  // Gershgorin-type upper bound safety: Rayleigh quotients underestimate.
  lmax = std::max(lmax, (Hs * x).norm());
  x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  double inv = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector y = llt.solve(x);
    const double next = x.dot(y);
    x = y / y.norm();
    if (std::abs(next - inv) <= 1e-12 * next) {
      inv = next;
      break;
    }
    inv = next;
  }
  return {1.0 / inv, lmax};
}

}  // namespace

Width parse_width(const std::string& s) {
  if (s == "wide") return Width::wide;
  if (s == "narrow") return Width::narrow;
  throw std::invalid_argument("width must be 'wide' or 'narrow', got '" + s + "'");
}

Restart parse_restart(const std::string& s) {
  if (s == "off") return Restart::off;
  if (s == "rollback") return Restart::rollback;
  if (s == "momentum") return Restart::momentum;
  throw std::invalid_argument("restart must be 'off', 'rollback' or 'momentum', got '" + s + "'");
}

Preconditioner parse_preconditioner(const std::string& s) {
  if (s == "row_sum") return Preconditioner::row_sum;
  if (s == "scalar") return Preconditioner::scalar;
  throw std::invalid_argument("preconditioner must be 'row_sum' or 'scalar', got '" + s + "'");
}

const char* to_string(Width w) { return w == Width::wide ? "wide" : "narrow"; }

const char* to_string(Restart r) {
  switch (r) {
    case Restart::off: return "off";
    case Restart::rollback: return "rollback";
    case Restart::momentum: return "momentum";
  }
  return "?";
}

Vector precondition(const Matrix& H, Preconditioner rule) {
  if (H.rows() != H.cols() || H.rows() == 0) throw std::invalid_argument("precondition: H must be square and non-empty");
  require_finite(H, "H");
  if (!is_positive_definite(H)) throw std::invalid_argument("precondition: H is not positive definite");
  if (rule == Preconditioner::row_sum) return H.cwiseAbs().rowwise().sum();
  const double lmax = H.rows() <= kDenseEigenLimit ? symmetric_eigen_range(H).max
                                                   : iterative_range(H).max;
  return Vector::Constant(H.rows(), lmax);
}

EigenRange scaled_spectrum(const Matrix& H, const Vector& L) {
  const Vector d = L.cwiseSqrt().cwiseInverse();
  const Matrix Hs = symmetrize(d.asDiagonal() * H * d.asDiagonal());
  if (Hs.rows() <= kDenseEigenLimit) return symmetric_eigen_range(Hs);
  return iterative_range(Hs);
}

double beta_from_mu(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("beta: convexity parameter must be positive");
  const double s = std::sqrt(std::min(mu, 1.0));
  return (1.0 - s) / (1.0 + s);
}

std::vector<double> beta_sequence(const Matrix& H, const Vector& L, int i_max) {
  if (i_max < 0) throw std::invalid_argument("beta_sequence: negative iteration budget");
  const double mu = scaled_spectrum(H, L).min;
  return std::vector<double>(i_max, beta_from_mu(mu));
}

FgmPlan make_plan(const mpc::CondensedQp& qp, const PlanOptions& opt) {
  if (opt.i_max < 0) throw std::invalid_argument("make_plan: negative iteration budget");
  FgmPlan plan;
  plan.L = precondition(qp.H, opt.rule);
  plan.L_inv = plan.L.cwiseInverse();
  const EigenRange r = scaled_spectrum(qp.H, plan.L);
  // Certificate for the generalized Lipschitz bound.
  if (!(r.max <= 1.0 + 1e-10)) throw NumericalError("preconditioner certificate failed: lambda_max(L^-1/2 H L^-1/2) > 1");
  if (!(r.min > 0.0)) throw NumericalError("Hessian is not strongly convex after scaling");
  plan.mu = r.min;
  plan.lambda_max = r.max;
  plan.beta.assign(opt.i_max, beta_from_mu(r.min));
  plan.i_max = opt.i_max;
  plan.restart = opt.restart;
  plan.width = opt.width;
  plan.matrix_free = opt.width == Width::wide && qp.size() > opt.matrix_free_above && qp.A.rows() == qp.nx &&
                     qp.nx > 0;
  return plan;
}

Vector prox_box(const Vector& x, const Vector& lo, const Vector& hi) {
  if (x.size() != lo.size() || x.size() != hi.size()) throw std::invalid_argument("prox_box: size mismatch");
  return x.cwiseMax(lo).cwiseMin(hi);
}

double mse(const Vector& u, const Vector& u_star, const Vector& u_min, const Vector& u_max) {
  const Index n = u.size();
  if (u_star.size() != n || u_min.size() != n || u_max.size() != n) throw std::invalid_argument("mse: size mismatch");
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double span = u_max(i) - u_min(i);
    if (!(span > 0.0)) throw std::invalid_argument("mse: zero bound span");
    const double e = (u(i) - u_star(i)) / span;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

void write_diagnostics_csv(std::ostream& os, const std::vector<IterationRecord>& rows) {
  os << "iteration,cost,gradient_map_norm,restart\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", r.iteration, r.cost, r.gradient_map_norm, r.restart ? 1 : 0);
    os << buf;
  }
}

}  // namespace rwmpc::fgm
