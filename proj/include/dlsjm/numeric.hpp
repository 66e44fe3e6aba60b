// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Core>
#include <cmath>

namespace dlsjm {

// log(1 + e^x), stable for |x| up to ~745.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Batched softplus sum over an array expression, SIMD through Eigen's
// vectorized exp/log. log(1 + t) with t = e^{-|x|} in (0, 1] is within one
// ulp of log1p there, and unlike log1p Eigen vectorizes double log on AVX.
// Every pairwise likelihood reduction routes through this so all code paths
// (pure functions, incremental cache) round identically.
template <typename Derived>
inline double softplus_sum(const Eigen::ArrayBase<Derived>& x) {
  return (((-x.abs()).exp() + 1.0).log() + x.max(0.0)).sum();
}

// Batched softplus into an output segment, same rounding as softplus_sum.
template <typename In, typename Out>
inline void softplus_batch(const Eigen::ArrayBase<In>& x, Eigen::ArrayBase<Out> const& out) {
  const_cast<Eigen::ArrayBase<Out>&>(out) = ((-x.abs()).exp() + 1.0).log() + x.max(0.0);
}

}  // namespace dlsjm
