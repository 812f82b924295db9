#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oucv/design.hpp"

namespace oucv {

/// Symmetric tridiagonal matrix; off[k] is entry (k, k+1).
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::vector<double> multiply(std::span<const double> x) const;
  Eigen::MatrixXd dense() const;
};

/// Closed-form inverse of the unit-variance exponential correlation matrix.
Tridiagonal precision_matrix(const Design& design, double theta);

/// Leave-one-out conditional means and unit-variance conditional variances;
/// the conditional variance at sigma2 is sigma2 * normalized_variances[i].
struct LooSummary {
  std::vector<double> predictions;
  std::vector<double> normalized_variances;
};

LooSummary loo_predictions(const Design& design, std::span<const double> y, double theta);

/// An objective of the form n log sigma2 + L + Q / sigma2, with L and Q free
/// of sigma2. Both the leave-one-out score and -2 log-likelihood (with L
/// absorbing n log 2 pi) take this shape.
struct ScoreDecomposition {
  double L = 0.0;
  double Q = 0.0;
  std::size_t n = 0;

  double at(double sigma2) const;
  /// argmin over sigma2 > 0, i.e. Q / n.
  double stationary_sigma2() const { return Q / static_cast<double>(n); }
};

/// Split of the leave-one-out logarithmic score. O(n).
ScoreDecomposition score_decomposition(const Design& design, std::span<const double> y,
                                       double theta);

/// Leave-one-out logarithmic score
/// sum_i [log var_{-i} + (y_i - mean_{-i})^2 / var_{-i}], O(n) time and O(1)
/// extra memory. Throws NumericalFailure on nonfinite input.
double log_score(const Design& design, std::span<const double> y, double theta, double sigma2);

/// d/dtheta of log_score, differentiated term by term.
double score_gradient_theta(const Design& design, std::span<const double> y, double theta,
                            double sigma2);

/// Markov-factorized Gaussian -2 log-likelihood; L includes n log(2 pi).
ScoreDecomposition ml_decomposition(const Design& design, std::span<const double> y, double theta);

double ml_neg2loglik(const Design& design, std::span<const double> y, double theta, double sigma2);

/// d/dtheta of ml_neg2loglik.
double ml_gradient_theta(const Design& design, std::span<const double> y, double theta,
                         double sigma2);

// Dense O(n^3) references. They never use the tridiagonal structure.

inline constexpr std::size_t kDenseOracleMaxSize = 2000;

/// Logarithmic score through a generic SPD factorization of R_theta and the
/// leave-one-out identities mean_{-i} = -sum_{j != i} P_ij y_j / P_ii,
/// var_{-i} = sigma2 / P_ii with P = R_theta^{-1}. Throws ConditioningError
/// when R_theta is numerically singular.
double dense_oracle_score(const Design& design, std::span<const double> y, double theta,
                          double sigma2);

/// Gaussian -2 log-likelihood with covariance sigma2 R_theta, dense.
double dense_oracle_ml(const Design& design, std::span<const double> y, double theta,
                       double sigma2);

/// Dense inverse of R_theta with the same conditioning guard.
Eigen::MatrixXd dense_precision(const Design& design, double theta);

}  // namespace oucv
