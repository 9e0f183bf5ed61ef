#include "rwmpc/mpc.hpp"

#include <numeric>

namespace rwmpc::mpc {

BlockingMap::BlockingMap(std::vector<int> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw std::invalid_argument("blocking: at least one interval is required");
  for (std::size_t b = 0; b < intervals_.size(); ++b) {
    if (intervals_[b] <= 0) throw std::invalid_argument("blocking: interval lengths must be positive");
    block_of_.insert(block_of_.end(), intervals_[b], static_cast<int>(b));
  }
  N_ = std::accumulate(intervals_.begin(), intervals_.end(), 0);
}

BlockingMap BlockingMap::identity(int N) {
  if (N <= 0) throw std::invalid_argument("blocking: horizon must be positive");
  return BlockingMap(std::vector<int>(N, 1));
}

BlockingMap build_blocking(const std::vector<int>& intervals) { return BlockingMap(intervals); }

Vector BlockingMap::expand(const Vector& blocked, Index nu) const {
  if (blocked.size() != nu * N_u()) throw std::invalid_argument("blocking: vector size mismatch");
  Vector out(nu * N_);
  for (int k = 0; k < N_; ++k) out.segment(k * nu, nu) = blocked.segment(block_of_[k] * nu, nu);
  return out;
}

Matrix BlockingMap::expansion_matrix(Index nu) const {
  Matrix M = Matrix::Zero(nu * N_, nu * N_u());
  for (int k = 0; k < N_; ++k) M.block(k * nu, block_of_[k] * nu, nu, nu).setIdentity();
  return M;
}

}  // namespace rwmpc::mpc
