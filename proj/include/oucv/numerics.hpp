#pragma once

#include <cmath>

namespace oucv::num {

/// 1 - e^{-x} without cancellation for small x.
inline double one_minus_exp(double x) noexcept { return -std::expm1(-x); }

/// log(1 - e^{-x}) for x > 0.
///
/// Below 1e-8 the series log(x) + log1p(-x/2) is used; the next term is
/// x^2/24 and falls under the rounding of the result. Between that and ln 2
/// the argument 1 - e^{-x} is formed with expm1, above ln 2 with log1p.
inline double log_one_minus_exp(double x) noexcept {
  if (x < 1e-8) return std::log(x) + std::log1p(-0.5 * x);
  if (x < 0.6931471805599453) return std::log(-std::expm1(-x));
  return std::log1p(-std::exp(-x));
}

/// e^{-x} / (1 - e^{-x}) = 1 / (e^x - 1).
inline double inv_expm1(double x) noexcept { return 1.0 / std::expm1(x); }

}  // namespace oucv::num
