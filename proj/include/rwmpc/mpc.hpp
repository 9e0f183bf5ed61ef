#pragma once

// Condensed infinite-horizon MPC: move blocking and the box-constrained QP
//   min 1/2 u^T H u + (F x)^T u + c(x)   s.t.  u_min <= u <= u_max
// whose cost equals the sum of stage costs 1/2 (x^T Q x + u^T R u) over the
// horizon plus the terminal term 1/2 x_N^T P x_N.

#include "rwmpc/linalg.hpp"
#include "rwmpc/lti.hpp"
#include "rwmpc/matrix_io.hpp"

#include <vector>

namespace rwmpc::mpc {

class BlockingMap {
 public:
  BlockingMap() = default;
  explicit BlockingMap(std::vector<int> intervals);

  /// (1, 1, ..., 1) of length N.
  static BlockingMap identity(int N);

  const std::vector<int>& intervals() const { return intervals_; }
  int N() const { return N_; }
  int N_u() const { return static_cast<int>(intervals_.size()); }
  /// Block index of horizon sample k.
  int block_of(int k) const { return block_of_[k]; }

  /// Repeats each block of `blocked` (n_u * N_u) over its interval.
  Vector expand(const Vector& blocked, Index nu) const;
  /// Expansion operator as a dense (n_u N) x (n_u N_u) matrix.
  Matrix expansion_matrix(Index nu) const;

 private:
  std::vector<int> intervals_;
  std::vector<int> block_of_;
  int N_ = 0;
};

BlockingMap build_blocking(const std::vector<int>& intervals);

struct CondensedQp {
  Matrix H;       // n_u N_u square, symmetric positive definite
  Matrix F;       // f_c = F x
  Matrix S0;      // c_c = 1/2 x^T S0 x
  Vector u_min;   // per decision variable
  Vector u_max;
  BlockingMap blocking;
  Index nx = 0;
  Index nu = 0;

  // Problem data kept for the matrix-free Hessian product.
  Matrix A, B, Q, R, P;

  Index size() const { return H.rows(); }
};

/// `u_min`/`u_max` are per input (size n_u) and replicated over the blocks.
/// P must satisfy the DARE for (A, B, Q, R); this is checked.
CondensedQp condense(const lti::DiscreteModel& model, const Matrix& Q, const Matrix& R, const Matrix& P,
                     const BlockingMap& blocking, const Vector& u_min, const Vector& u_max);

Vector linear_term(const CondensedQp& qp, const Vector& x_hat);
void linear_term(const CondensedQp& qp, const Vector& x_hat, Vector& f_out);

double constant_term(const CondensedQp& qp, const Vector& x_hat);

/// 1/2 u^T H u + f^T u + c_c.
double mpc_cost(const CondensedQp& qp, const Vector& u, const Vector& x_hat);

/// Same, given a precomputed f_c; constant omitted.
double qp_objective(const Matrix& H, const Vector& f, const Vector& u);

/// Hessian-vector product by a forward state sweep and an adjoint sweep,
/// O(N (n_x^2 + n_x n_u)) instead of O((n_u N_u)^2). Holds its own workspace.
class HorizonHessian {
 public:
  explicit HorizonHessian(const CondensedQp& qp);
  void apply(const Vector& v, Vector& out);

 private:
  const CondensedQp* qp_;
  Matrix X_;      // states x_1..x_N as columns
  Matrix U_;      // expanded inputs as columns
  Vector lambda_, tmp_;
};

io::MatrixSet to_set(const CondensedQp& qp);
/// Rebuilds the dense QP data only (no matrix-free operator).
CondensedQp qp_from_set(const io::MatrixSet& s);

}  // namespace rwmpc::mpc
