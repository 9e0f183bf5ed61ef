#include "rwmpc/sim.hpp"

#include <cmath>

namespace rwmpc::sim {

PsBank::PsBank(int channels, const PsParams& p, double substep, double saturation) : channels_(channels) {
  if (channels <= 0) throw std::invalid_argument("power supply: channel count must be positive");
  if (!(substep > 0.0)) throw std::invalid_argument("power supply: substep must be positive");
  if (!(p.tau > 0.0) || !(p.delay >= 0.0) || !(p.v_max > 0.0))
    throw std::invalid_argument("power supply: tau, v_max must be positive and delay non-negative");
  if (!(saturation > 0.0)) throw std::invalid_argument("power supply: saturation must be positive");
  const double steps = p.delay / substep;
  delay_steps_ = static_cast<int>(std::lround(steps));
  if (std::abs(steps - delay_steps_) > 1e-9 * std::max(1.0, steps))
    throw std::invalid_argument("power supply: delay must be an integer multiple of the substep");
  limit_ = std::min(saturation, p.v_max);
  a_ = std::exp(-substep / p.tau);
  ring_.assign(std::max(delay_steps_, 1), Vector::Zero(channels));
  z_ = Vector::Zero(channels);
  out_ = Vector::Zero(channels);
}

Vector PsBank::clip(const Vector& u_cmd) const { return u_cmd.cwiseMax(-limit_).cwiseMin(limit_); }

const Vector& PsBank::push(const Vector& u_in) {
  if (u_in.size() != channels_) throw std::invalid_argument("power supply: input size mismatch");
  if (delay_steps_ == 0) {
    out_ = u_in;
    return out_;
  }
  // ring_[head_] holds the oldest entry
  out_ = ring_[head_];
  ring_[head_] = u_in;
  head_ = (head_ + 1) % delay_steps_;
  return out_;
}

void PsBank::lag_step(const Vector& delayed) { z_ = delayed + a_ * (z_ - delayed); }

Matrix PsBank::step(const Vector& u_cmd, int substeps) {
  const Vector u = clip(u_cmd);
  Matrix out(channels_, substeps);
  for (int s = 0; s < substeps; ++s) {
    lag_step(push(u));
    out.col(s) = z_;
  }
  return out;
}

}  // namespace rwmpc::sim
