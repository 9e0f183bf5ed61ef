#pragma once

// Preconditioned primal fast gradient method for the condensed box QP.

#include "rwmpc/linalg.hpp"
#include "rwmpc/mpc.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace rwmpc::fgm {

enum class Width { wide, narrow };
enum class Restart { off, rollback, momentum };
enum class Preconditioner { row_sum, scalar };

Width parse_width(const std::string& s);
Restart parse_restart(const std::string& s);
Preconditioner parse_preconditioner(const std::string& s);
const char* to_string(Width w);
const char* to_string(Restart r);

/// Diagonal L with L >= H in the Loewner order. Row sums of |H| by default
/// (Gershgorin), or lambda_max(H) I. Throws when H is not positive definite.
Vector precondition(const Matrix& H, Preconditioner rule = Preconditioner::row_sum);

/// Extreme eigenvalues of L^{-1/2} H L^{-1/2}.
EigenRange scaled_spectrum(const Matrix& H, const Vector& L);

/// Constant beta = (1 - sqrt(mu)) / (1 + sqrt(mu)) repeated i_max times,
/// mu = lambda_min(L^{-1/2} H L^{-1/2}).
std::vector<double> beta_sequence(const Matrix& H, const Vector& L, int i_max);
double beta_from_mu(double mu);

struct FgmPlan {
  Vector L;
  Vector L_inv;
  std::vector<double> beta;
  int i_max = 0;
  Restart restart = Restart::rollback;
  Width width = Width::wide;
  double mu = 0.0;         // lambda_min of the scaled Hessian
  double lambda_max = 0.0; // lambda_max of the scaled Hessian, <= 1
  /// Hessian products through the horizon recursion instead of the dense H.
  bool matrix_free = false;

  double condition() const { return lambda_max / mu; }
};

struct PlanOptions {
  int i_max = 50;
  Restart restart = Restart::rollback;
  Width width = Width::wide;
  Preconditioner rule = Preconditioner::row_sum;
  /// Use the matrix-free product for QPs larger than this (wide width only).
  Index matrix_free_above = 600;
};

FgmPlan make_plan(const mpc::CondensedQp& qp, const PlanOptions& opt);

/// Elementwise clamp.
Vector prox_box(const Vector& x, const Vector& lo, const Vector& hi);

struct FgmResult {
  Vector u_opt;
  int iterations = 0;
  int restarts = 0;
  double gradient_map_norm = 0.0;
};

struct IterationRecord {
  int iteration;
  double cost;
  double gradient_map_norm;
  bool restart;
};

void write_diagnostics_csv(std::ostream& os, const std::vector<IterationRecord>& rows);

/// Plan and workspace for one control loop. solve() does not allocate.
class FgmSolver {
 public:
  FgmSolver(const mpc::CondensedQp& qp, FgmPlan plan);
  ~FgmSolver();
  FgmSolver(FgmSolver&&) noexcept;
  FgmSolver& operator=(FgmSolver&&) noexcept;

  const FgmPlan& plan() const { return plan_; }

  /// Runs exactly plan().i_max iterations. `warm_start` may be empty (cold
  /// start at zero). Throws NumericalError on a non-finite iterate.
  const FgmResult& solve(const Vector& f_c, const Vector& warm_start = Vector(),
                         std::vector<IterationRecord>* diagnostics = nullptr);

  /// Same with a different iteration budget (<= capacity is not required).
  const FgmResult& solve_iters(const Vector& f_c, int i_max, const Vector& warm_start = Vector(),
                               std::vector<IterationRecord>* diagnostics = nullptr);

 private:
  struct Impl;
  FgmPlan plan_;
  std::unique_ptr<Impl> impl_;
  FgmResult result_;
};

FgmResult fgm_solve(const mpc::CondensedQp& qp, const Vector& f_c, const Vector& warm_start, const FgmPlan& plan);

/// sqrt(mean(((u_i - u*_i) / (u_max_i - u_min_i))^2)).
double mse(const Vector& u, const Vector& u_star, const Vector& u_min, const Vector& u_max);

}  // namespace rwmpc::fgm
