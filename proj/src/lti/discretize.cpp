#include "rwmpc/lti.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace rwmpc::lti {

DiscreteModel zoh_discretize(const ContinuousModel& m, double Ts) {
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw std::invalid_argument("sampling time must be positive");
  m.validate();
  const Index n = m.nx(), nu = m.nu();
  // exp([[A, B], [0, 0]] Ts) = [[Ad, Bd], [0, I]]
  Matrix aug = Matrix::Zero(n + nu, n + nu);
  aug.topLeftCorner(n, n) = m.A * Ts;
  aug.topRightCorner(n, nu) = m.B * Ts;
  const Matrix e = aug.exp();
  DiscreteModel d;
  d.A = e.topLeftCorner(n, n);
  d.B = e.topRightCorner(n, nu);
  if (!d.A.allFinite() || !d.B.allFinite())
    throw NumericalError("matrix exponential overflowed during discretization");
  d.C = m.C;
  d.D = m.D;
  d.C_aux = m.C_aux;
  d.Ts = Ts;
  return d;
}

}  // namespace rwmpc::lti
