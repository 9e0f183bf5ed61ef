#pragma once

// Reference solver for strictly convex box-constrained QPs
//   min 1/2 u^T H u + f^T u   s.t.  lo <= u <= hi.

#include "rwmpc/linalg.hpp"
#include "rwmpc/matrix_io.hpp"
#include "rwmpc/mpc.hpp"

#include <cstdint>
#include <vector>

namespace rwmpc::oracle {

enum class BoundStatus : std::int8_t { lower = -1, free = 0, upper = 1 };

struct OracleSolution {
  Vector u_star;
  std::vector<BoundStatus> active_set;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool used_fallback = false;
};

/// Primal active-set method; falls back to a long projected-gradient run if a
/// working set repeats (cycling) or the iteration cap is hit.
OracleSolution oracle_solve(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi);
OracleSolution oracle_solve(const mpc::CondensedQp& qp, const Vector& f_c);

/// Max |projected gradient|; the gradient is clipped at active bounds.
/// Throws std::invalid_argument when u is infeasible.
double kkt_check(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi, const Vector& u);
double kkt_check(const mpc::CondensedQp& qp, const Vector& f_c, const Vector& u);

/// Projected gradient with step 1/lambda_max(H), stopping when the KKT
/// residual drops below `tol` or after `max_iter` iterations.
Vector projected_gradient_solve(const Matrix& H, const Vector& f, const Vector& lo, const Vector& hi,
                                long max_iter = 1000000, double tol = 1e-12);

io::MatrixSet to_set(const OracleSolution& s);

}  // namespace rwmpc::oracle
