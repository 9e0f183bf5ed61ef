#include "rwmpc/fgm.hpp"

#include <cmath>
#include <optional>

namespace rwmpc::fgm {

namespace {

template <typename T>
struct Core {
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  Mat H;  // empty when matrix-free
  Vec L, L_inv, lo, hi, f;
  Vec u, u_prev, v, v_next, x, g;
  std::optional<mpc::HorizonHessian> op;  // double only
  Vector op_in, op_out;

  Core(const mpc::CondensedQp& qp, const FgmPlan& plan) {
    const Index n = qp.size();
    if (plan.matrix_free) {
      op.emplace(qp);
      op_in.resize(n);
      op_out.resize(n);
    } else {
      H = qp.H.cast<T>();
    }
    L = plan.L.cast<T>();
    L_inv = plan.L_inv.cast<T>();
    lo = qp.u_min.cast<T>();
    hi = qp.u_max.cast<T>();
    for (Vec* w : {&f, &u, &u_prev, &v, &v_next, &x, &g}) w->resize(n);
  }

  void hess(const Vec& in, Vec& out) {
    if (op) {
      if constexpr (std::is_same_v<T, double>) {
        op->apply(in, out);
      } else {
        op_in = in.template cast<double>();
        op->apply(op_in, op_out);
        out = op_out.cast<T>();
      }
    } else {
      out.noalias() = H * in;
    }
  }

  double cost(const Vec& w) {
    hess(w, g);
    return static_cast<double>(T(0.5) * w.dot(g) + f.dot(w));
  }

  void run(const Vector& f_c, const Vector& warm, int i_max, const FgmPlan& plan, FgmResult& res,
           std::vector<IterationRecord>* diag) {
    f = f_c.cast<T>();
    if (warm.size() == 0) {
      u.setZero();
    } else {
      // a warm start is projected so every iterate stays feasible
      u = warm.cast<T>().cwiseMax(lo).cwiseMin(hi);
    }
    v = u;
    u_prev = u;
    res.restarts = 0;
    double gm = 0.0;
    if (diag) diag->clear();
    for (int i = 1; i <= i_max; ++i) {
      hess(v, g);
      g += f;
      x = v - L_inv.cwiseProduct(g);
      u_prev.swap(u);  // u_prev = u^{i-1}
      u = x.cwiseMax(lo).cwiseMin(hi);
      const T beta = static_cast<T>(plan.beta.empty() ? 0.0 : plan.beta[std::min<std::size_t>(i - 1, plan.beta.size() - 1)]);
      bool restarted = false;
      if (plan.restart != Restart::off && (v - u).dot(u - u_prev) > T(0)) {
        restarted = true;
        ++res.restarts;
        if (plan.restart == Restart::rollback) {
          u = u_prev;
          v_next = u_prev;
        } else {
          v_next = u;
        }
      } else {
        v_next = u + beta * (u - u_prev);
      }
      if (diag || i == i_max) gm = static_cast<double>(L.cwiseProduct(v - x.cwiseMax(lo).cwiseMin(hi)).norm());
      if (diag) diag->push_back({i, cost(u), gm, restarted});  // reuses g, recomputed next iteration
      v.swap(v_next);
      if (!std::isfinite(static_cast<double>(u.sum())))
        throw NumericalError("fgm: non-finite iterate at iteration " + std::to_string(i) +
                             " (bad conditioning or width underflow)");
    }
    res.u_opt = u.template cast<double>();
    res.iterations = i_max;
    res.gradient_map_norm = gm;
  }
};

}  // namespace

struct FgmSolver::Impl {
  std::optional<Core<double>> wide;
  std::optional<Core<float>> narrow;
};

FgmSolver::FgmSolver(const mpc::CondensedQp& qp, FgmPlan plan) : plan_(std::move(plan)), impl_(new Impl) {
  if (plan_.L.size() != qp.size() || plan_.L_inv.size() != qp.size())
    throw std::invalid_argument("fgm: plan does not match the QP dimension");
  if (plan_.width == Width::wide) {
    impl_->wide.emplace(qp, plan_);
  } else {
    if (plan_.matrix_free) plan_.matrix_free = false;
    impl_->narrow.emplace(qp, plan_);
  }
  result_.u_opt.resize(qp.size());
}

FgmSolver::~FgmSolver() = default;
FgmSolver::FgmSolver(FgmSolver&&) noexcept = default;
FgmSolver& FgmSolver::operator=(FgmSolver&&) noexcept = default;

const FgmResult& FgmSolver::solve(const Vector& f_c, const Vector& warm_start, std::vector<IterationRecord>* diag) {
  return solve_iters(f_c, plan_.i_max, warm_start, diag);
}

const FgmResult& FgmSolver::solve_iters(const Vector& f_c, int i_max, const Vector& warm_start,
                                        std::vector<IterationRecord>* diag) {
  const Index n = plan_.L.size();
  if (f_c.size() != n) throw std::invalid_argument("fgm: f_c dimension mismatch");
  if (warm_start.size() != 0 && warm_start.size() != n) throw std::invalid_argument("fgm: warm start dimension mismatch");
  if (i_max < 0) throw std::invalid_argument("fgm: negative iteration budget");
  if (impl_->wide) {
    impl_->wide->run(f_c, warm_start, i_max, plan_, result_, diag);
  } else {
    impl_->narrow->run(f_c, warm_start, i_max, plan_, result_, diag);
  }
  return result_;
}

FgmResult fgm_solve(const mpc::CondensedQp& qp, const Vector& f_c, const Vector& warm_start, const FgmPlan& plan) {
  FgmSolver s(qp, plan);
  return s.solve(f_c, warm_start);
}

}  // namespace rwmpc::fgm
