#include "rwmpc/riccati.hpp"

namespace rwmpc::riccati {

void kf_step_inplace(EstimatorState& est, const Vector& u_prev, const Vector& y, const lti::DiscreteModel& model,
                     const Matrix& M_K, Vector& scratch) {
  const Index n = model.nx();
  if (est.x_hat.size() != n || u_prev.size() != model.nu() || y.size() != model.ny() || M_K.rows() != n ||
      M_K.cols() != model.ny())
    throw std::invalid_argument("kf_step: dimension mismatch");
  est.x_pred.noalias() = model.A * est.x_hat;
  est.x_pred.noalias() += model.B * u_prev;
  scratch = y;
  scratch.noalias() -= model.C * est.x_pred;  // innovation
  est.x_hat = est.x_pred;
  est.x_hat.noalias() += M_K * scratch;
}

EstimatorState kf_step(const EstimatorState& est, const Vector& u_prev, const Vector& y,
                       const lti::DiscreteModel& model, const Matrix& M_K) {
  EstimatorState next = est;
  if (next.x_pred.size() != est.x_hat.size()) next.x_pred.resize(est.x_hat.size());
  Vector scratch(y.size());
  kf_step_inplace(next, u_prev, y, model, M_K, scratch);
  return next;
}

LqgCommand lqg_control(const Vector& x_hat, const Matrix& K_LQ, bool ewp, const Vector& u_min, const Vector& u_max) {
  LqgCommand out;
  out.u_command = K_LQ * x_hat;
  if (ewp) {
    if (u_min.size() != out.u_command.size() || u_max.size() != out.u_command.size())
      throw std::invalid_argument("lqg_control: bound dimension mismatch");
    if (!u_min.allFinite() || !u_max.allFinite()) throw std::invalid_argument("lqg_control: EWP needs finite bounds");
    out.u_for_estimator = out.u_command.cwiseMax(u_min).cwiseMin(u_max);
  } else {
    out.u_for_estimator = out.u_command;
  }
  return out;
}

}  // namespace rwmpc::riccati
