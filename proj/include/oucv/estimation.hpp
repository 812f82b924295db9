#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "oucv/design.hpp"
#include "oucv/scoring.hpp"

namespace oucv {

/// The rectangle [theta_lo, theta_hi] x [sigma2_lo, sigma2_hi].
struct ParameterBox {
  double theta_lo;
  double theta_hi;
  double sigma2_lo;
  double sigma2_hi;

  /// Throws InvalidParameter unless 0 < lo <= hi for both coordinates.
  static ParameterBox make(double theta_lo, double theta_hi, double sigma2_lo, double sigma2_hi);
};

struct BoundaryFlags {
  bool theta_lo = false;
  bool theta_hi = false;
  bool sigma2_lo = false;
  bool sigma2_hi = false;

  bool any() const { return theta_lo || theta_hi || sigma2_lo || sigma2_hi; }
  bool theta_interior() const { return !theta_lo && !theta_hi; }
  bool sigma2_interior() const { return !sigma2_lo && !sigma2_hi; }
  /// "none" or '|'-joined active bounds, e.g. "theta_lo|sigma2_hi".
  std::string str() const;
};

struct EstimateResult {
  double theta_hat = 0.0;
  double sigma2_hat = 0.0;
  double product = 0.0;
  double objective_value = 0.0;
  /// d objective / d theta at the returned point.
  double gradient_at_opt = 0.0;
  BoundaryFlags flags;
  int iterations = 0;
};

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Global-then-local scalar minimization on [lo, hi]: `nodes` log-spaced grid
/// points, then golden-section on the interval between the neighbours of the
/// best node until the bracket is narrower than rel_tol * x. The smallest x
/// wins ties among grid nodes; the result is never worse than the best node.
/// Throws NumericalFailure carrying x if f is nonfinite at a grid node.
ScalarMinimum minimize_log_grid_golden(const std::function<double(double)>& f, double lo,
                                       double hi, int nodes = 64, double rel_tol = 1e-8);

inline constexpr int kMaxGoldenIterations = 200;

/// Minimizer of n log sigma2 + Q / sigma2 clamped into [sigma2_lo, sigma2_hi].
double profile_sigma2(const ScoreDecomposition& decomp, const ParameterBox& box);

/// Joint cross-validation estimate over the box by minimizing the profile
/// theta -> S(theta, profile_sigma2(theta)).
EstimateResult estimate_cv_joint(const Design& design, std::span<const double> y,
                                 const ParameterBox& box);

/// theta minimizing S(theta, sigma1_sq) over [theta_lo, theta_hi].
EstimateResult estimate_cv_fixed_sigma(const Design& design, std::span<const double> y,
                                       double sigma1_sq, double theta_lo, double theta_hi);

/// sigma2 minimizing S(theta2, sigma2) over [sigma2_lo, sigma2_hi], closed form.
EstimateResult estimate_cv_fixed_theta(const Design& design, std::span<const double> y,
                                       double theta2, double sigma2_lo, double sigma2_hi);

/// Maximum-likelihood estimate through the same profile scheme.
EstimateResult estimate_ml_joint(const Design& design, std::span<const double> y,
                                 const ParameterBox& box);

/// Profile minimization for any objective of the form n log sigma2 + L + Q/sigma2.
/// `gradient` evaluates d/dtheta at (theta, sigma2); when empty a central
/// difference of the objective is reported instead.
EstimateResult estimate_profile(const std::function<ScoreDecomposition(double)>& decompose,
                                const ParameterBox& box,
                                const std::function<double(double, double)>& gradient = {});

/// sqrt(n) (product_hat - true_product) / (true_product tau).
double standardized_statistic(double product_hat, double true_product, std::size_t n, double tau);

}  // namespace oucv
