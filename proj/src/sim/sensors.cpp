#include "rwmpc/sim.hpp"

#include <cmath>
#include <numbers>

namespace rwmpc::sim {

SensorReducer::SensorReducer(const std::vector<double>& angles_deg) {
  const Index n = static_cast<Index>(angles_deg.size());
  if (n < 2) throw std::invalid_argument("sensor reducer: at least two sensors are required");
  M_.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double ph = angles_deg[i] * std::numbers::pi / 180.0;
    M_(i, 0) = std::cos(ph);
    M_(i, 1) = std::sin(ph);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(M_);
  if (qr.rank() < 2) throw std::invalid_argument("sensor reducer: sensor angles do not resolve an n=1 harmonic");
  T_out_ = qr.solve(Matrix::Identity(n, n));
}

Vector SensorReducer::reduce(const Vector& y_m) const {
  if (y_m.size() != M_.rows()) throw std::invalid_argument("sensor reducer: measurement size mismatch");
  return T_out_ * y_m;
}

}  // namespace rwmpc::sim
