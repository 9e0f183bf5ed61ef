#include "rwmpc/oracle.hpp"

#include <cmath>
#include <set>

namespace rwmpc::oracle {

namespace {

void check_problem(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi) {
  const Index n = H.rows();
  if (H.cols() != n || f.size() != n || lo.size() != n || hi.size() != n)
    throw std::invalid_argument("oracle: dimension mismatch");
  for (Index i = 0; i < n; ++i)
    if (!(lo(i) <= hi(i))) throw std::invalid_argument("oracle: bounds must satisfy lo <= hi");
}

std::vector<BoundStatus> classify(const Vector& u, const Vector& lo, const Vector& hi) {
  std::vector<BoundStatus> s(u.size(), BoundStatus::free);
  for (Index i = 0; i < u.size(); ++i) {
    if (u(i) <= lo(i)) s[i] = BoundStatus::lower;
    else if (u(i) >= hi(i)) s[i] = BoundStatus::upper;
  }
  return s;
}

// Minimizes over the free variables with the others held at their bound.
// Returns false when the reduced Hessian is not positive definite.
bool solve_free(const Matrix& H, const Vector& f, const std::vector<BoundStatus>& W, const Vector& u,
                Vector& target) {
  const Index n = H.rows();
  std::vector<Index> F;
  for (Index i = 0; i < n; ++i)
    if (W[i] == BoundStatus::free) F.push_back(i);
  target = u;
  if (F.empty()) return true;
  const Index m = static_cast<Index>(F.size());
  Matrix Hff(m, m);
  Vector rhs(m);
  for (Index a = 0; a < m; ++a) {
    double r = -f(F[a]);
    for (Index j = 0; j < n; ++j)
      if (W[j] != BoundStatus::free) r -= H(F[a], j) * u(j);
    rhs(a) = r;
    for (Index b = 0; b < m; ++b) Hff(a, b) = H(F[a], F[b]);
  }
  Eigen::LLT<Matrix> llt(Hff);
  if (llt.info() != Eigen::Success) return false;
  Vector z = llt.solve(rhs);
  z += llt.solve(rhs - Hff * z);  // one refinement step
  for (Index a = 0; a < m; ++a) target(F[a]) = z(a);
  return true;
}

}  // namespace

double kkt_check(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi, const Vector& u) {
  check_problem(H, f, lo, hi);
  if (u.size() != H.rows()) throw std::invalid_argument("kkt_check: dimension mismatch");
  double worst = 0.0;
  const Vector g = H * u + f;
  for (Index i = 0; i < u.size(); ++i) {
    if (u(i) < lo(i) || u(i) > hi(i)) throw std::invalid_argument("kkt_check: point is infeasible");
    double pg = g(i);
    if (u(i) <= lo(i)) pg = std::min(pg, 0.0);
    if (u(i) >= hi(i)) pg = std::max(pg, 0.0);
    worst = std::max(worst, std::abs(pg));
  }
  return worst;
}

double kkt_check(const mpc::CondensedQp& qp, const Vector& f_c, const Vector& u) {
  return kkt_check(qp.H, f_c, qp.u_min, qp.u_max, u);
}

Vector projected_gradient_solve(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi, long max_iter,
                                double tol) {
  check_problem(H, f, lo, hi);
  const double step = 1.0 / symmetric_eigen_range(H).max;
  Vector u = Vector::Zero(H.rows()).cwiseMax(lo).cwiseMin(hi);
  for (long it = 0; it < max_iter; ++it) {
    const Vector next = (u - step * (H * u + f)).cwiseMax(lo).cwiseMin(hi);
    const bool still = (next - u).lpNorm<Eigen::Infinity>() == 0.0;
    u = next;
    if (still || ((it & 63) == 0 && kkt_check(H, f, lo, hi, u) <= tol)) break;
  }
  return u;
}

OracleSolution oracle_solve(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi) {
  check_problem(H, f, lo, hi);
  require_finite(H, "H");
  require_finite(f, "f");
  const Index n = H.rows();
  const double tol = 1e-10 * (1.0 + f.lpNorm<Eigen::Infinity>());
  const double mult_tol = 1e-3 * tol;

  OracleSolution sol;
  // Start from the clipped unconstrained minimizer.
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("oracle: H is not positive definite");
  Vector u = (-llt.solve(f)).cwiseMax(lo).cwiseMin(hi);
  std::vector<BoundStatus> W = classify(u, lo, hi);
  for (Index i = 0; i < n; ++i) {
    if (W[i] == BoundStatus::lower) u(i) = lo(i);
    if (W[i] == BoundStatus::upper) u(i) = hi(i);
  }

  std::set<std::vector<BoundStatus>> seen_at_release;
  const int max_iter = static_cast<int>(10 * n + 100);
  bool done = false;
  Vector target;
  int it = 0;
  for (; it < max_iter && !done; ++it) {
    if (!solve_free(H, f, W, u, target)) break;
    Vector p = target - u;
    if (p.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + u.lpNorm<Eigen::Infinity>())) {
      u = target;
      const Vector g = H * u + f;
      Index worst = -1;
      double worst_val = -mult_tol;
      for (Index i = 0; i < n; ++i) {
        double lam = 0.0;
        if (W[i] == BoundStatus::lower) lam = g(i);
        else if (W[i] == BoundStatus::upper) lam = -g(i);
        else continue;
        if (lam < worst_val) worst_val = lam, worst = i;
      }
      if (worst < 0) {
        done = true;
        break;
      }
      if (!seen_at_release.insert(W).second) break;  // cycling
      W[worst] = BoundStatus::free;
      continue;
    }
    // Longest feasible step toward the target.
    double alpha = 1.0;
    Index block = -1;
    BoundStatus block_side = BoundStatus::free;
    for (Index i = 0; i < n; ++i) {
      if (W[i] != BoundStatus::free) continue;
      if (p(i) < 0.0) {
        const double a = (lo(i) - u(i)) / p(i);
        if (a < alpha) alpha = a, block = i, block_side = BoundStatus::lower;
      } else if (p(i) > 0.0) {
        const double a = (hi(i) - u(i)) / p(i);
        if (a < alpha) alpha = a, block = i, block_side = BoundStatus::upper;
      }
    }
    alpha = std::max(alpha, 0.0);
    u += alpha * p;
    if (block >= 0) {
      W[block] = block_side;
      u(block) = block_side == BoundStatus::lower ? lo(block) : hi(block);
    } else {
      u = target;
    }
    u = u.cwiseMax(lo).cwiseMin(hi);
  }
  sol.iterations = it;

  if (done) {
    sol.u_star = u;
    sol.kkt_residual = kkt_check(H, f, lo, hi, u);
  }
  if (!done || !(sol.kkt_residual <= tol)) {
    sol.used_fallback = true;
    sol.u_star = projected_gradient_solve(H, f, lo, hi, 1000000, tol);
    sol.kkt_residual = kkt_check(H, f, lo, hi, sol.u_star);
  }
  sol.active_set = classify(sol.u_star, lo, hi);
  return sol;
}

OracleSolution oracle_solve(const mpc::CondensedQp& qp, const Vector& f_c) {
  return oracle_solve(qp.H, f_c, qp.u_min, qp.u_max);
}

io::MatrixSet to_set(const OracleSolution& s) {
  io::MatrixSet out;
  out.put("u_star", s.u_star);
  Vector status(s.active_set.size());
  for (std::size_t i = 0; i < s.active_set.size(); ++i) status(i) = static_cast<double>(s.active_set[i]);
  out.put("active_set", status);
  out.put_scalar("kkt_residual", s.kkt_residual);
  return out;
}

}  // namespace rwmpc::oracle
