#include "rwmpc/lti.hpp"

#include <cmath>

namespace rwmpc::lti {

std::vector<FrequencyPoint> freq_response(const ContinuousModel& m, const std::vector<double>& omega_grid) {
  m.validate();
  const Index n = m.nx();
  const ComplexMatrix A = m.A.cast<std::complex<double>>();
  const ComplexMatrix B = m.B.cast<std::complex<double>>();
  const ComplexMatrix C = m.C.cast<std::complex<double>>();
  const ComplexMatrix D = m.D.cast<std::complex<double>>();
  std::vector<FrequencyPoint> out;
  out.reserve(omega_grid.size());
  for (double w : omega_grid) {
    FrequencyPoint p;
    p.omega = w;
    if (n == 0) {
      p.gain = D;
      out.push_back(std::move(p));
      continue;
    }
    ComplexMatrix M = -A;
    M.diagonal().array() += std::complex<double>(0.0, w);
    Eigen::PartialPivLU<ComplexMatrix> lu(M);
    if (!(lu.rcond() > 1e-12)) {
      p.singular = true;
      p.gain = ComplexMatrix::Constant(m.ny(), m.nu(), std::complex<double>(NAN, NAN));
    } else {
      p.gain = C * lu.solve(B) + D;
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

double cnorm2(const ComplexMatrix& g) {
  if (g.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(g);
  return svd.singularValues()(0);
}

}  // namespace

double relative_response_deviation(const ContinuousModel& a, const ContinuousModel& b,
                                   const std::vector<double>& omega_grid) {
  if (a.ny() != b.ny() || a.nu() != b.nu()) throw std::invalid_argument("models have different input/output counts");
  const auto ra = freq_response(a, omega_grid);
  const auto rb = freq_response(b, omega_grid);
  double peak = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].singular || rb[i].singular) throw NumericalError("resolvent is singular on the frequency grid");
    peak = std::max(peak, cnorm2(ra[i].gain));
    dev = std::max(dev, cnorm2(ra[i].gain - rb[i].gain));
  }
  return peak > 0.0 ? dev / peak : dev;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw std::invalid_argument("log_grid: invalid range");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i) g[i] = std::pow(10.0, a + (b - a) * i / (points - 1));
  return g;
}

}  // namespace rwmpc::lti
