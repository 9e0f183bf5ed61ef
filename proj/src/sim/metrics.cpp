#include "rwmpc/sim.hpp"

#include <cmath>

namespace rwmpc::sim {

std::optional<double> settling_time(const SimTrace& tr, double threshold) {
  const Index K = tr.samples();
  if (K == 0) return std::nullopt;
  Index last_bad = -1;
  for (Index k = K - 1; k >= 0; --k) {
    if (!(tr.y.col(k).cwiseAbs().maxCoeff() < threshold)) {
      last_bad = k;
      break;
    }
  }
  if (last_bad == K - 1) return std::nullopt;
  return tr.t[last_bad + 1];
}

double power_integral(const SimTrace& tr, double t_end) {
  const Index K = tr.samples();
  if (K == 0) return 0.0;
  if (tr.t.back() < t_end - 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("power_integral: trace does not cover t_end");
  double acc = 0.0;
  for (Index k = 1; k < K && tr.t[k - 1] < t_end; ++k) {
    const double t0 = tr.t[k - 1], t1 = tr.t[k];
    const double p0 = tr.power[k - 1];
    double p1 = tr.power[k], te = t1;
    if (t1 > t_end) {
      // last interval cut at t_end, power interpolated linearly
      te = t_end;
      p1 = p0 + (tr.power[k] - p0) * (t_end - t0) / (t1 - t0);
    }
    acc += 0.5 * (p0 + p1) * (te - t0);
  }
  return acc;
}

double peak_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

NoiseSource::NoiseSource(double power, double Ts, bool raw_variance, std::uint64_t seed) : rng_(seed) {
  if (!(power >= 0.0) || !std::isfinite(power)) throw std::invalid_argument("noise power must be non-negative");
  if (!(Ts > 0.0)) throw std::invalid_argument("noise: sampling time must be positive");
  sigma_ = std::sqrt(raw_variance ? power : power / Ts);
}

void NoiseSource::add_to(Vector& v) {
  if (sigma_ == 0.0) return;
  for (Index i = 0; i < v.size(); ++i) v(i) += sigma_ * normal_(rng_);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finalizer over a mixed key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rwmpc::sim
