#pragma once

// Internal helpers shared by the unrolled forward passes and their backward passes.

#include "lsalsa/unrolled.hpp"

namespace lsalsa::detail {

inline Batch soft_rows(const Batch& z, const Vector& taus) {
  Batch out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    for (Eigen::Index r = 0; r < z.rows(); ++r) out(r, c) = soft_threshold(z(r, c), taus[r]);
  return out;
}

/// 1 where |z| > tau (active), else 0; the kink itself counts as inactive.
inline Batch active_mask(const Batch& z, const Vector& taus) {
  Batch out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    for (Eigen::Index r = 0; r < z.rows(); ++r) out(r, c) = std::abs(z(r, c)) > taus[r] ? 1.0 : 0.0;
  return out;
}

inline Batch as_batch(const Vector& v) { return Batch(v); }

}  // namespace lsalsa::detail
