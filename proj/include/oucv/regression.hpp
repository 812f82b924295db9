#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "oucv/design.hpp"
#include "oucv/estimation.hpp"
#include "oucv/scoring.hpp"

namespace oucv {

// Unknown-mean model z = F beta + y. F is the n x p matrix of basis values
// on the design and must have full column rank (LinearDependence otherwise).
//
// With P = R_theta^{-1} and M = F' P F, the projected precision
//   Q = P - P F M^{-1} F' P
// gives the trend-aware leave-one-out quantities: residual (Q z)_i / Q_ii and
// unit-variance prediction variance 1 / Q_ii.

/// Generalized least squares coefficients (F' P F)^{-1} F' P z, O(n p^2).
Eigen::VectorXd gls_beta(const Design& design, std::span<const double> z, double theta,
                         const Eigen::MatrixXd& F);

/// (F' P F)^{-1}, the unit-variance covariance of gls_beta.
Eigen::MatrixXd gls_covariance(const Design& design, double theta, const Eigen::MatrixXd& F);

/// Trend-aware leave-one-out predictions and unit-variance variances 1/Q_ii,
/// through the projected-precision shortcut. O(n p^2).
LooSummary reg_loo_predictions(const Design& design, std::span<const double> z, double theta,
                               const Eigen::MatrixXd& F);

/// S_bar = n log sigma2 + Lbar + Qbar / sigma2 with Lbar = -sum log Q_ii and
/// Qbar = sum (Q z)_i^2 / Q_ii. Throws ConditioningError if some Q_ii <= 0.
ScoreDecomposition reg_score_decomposition(const Design& design, std::span<const double> z,
                                           double theta, const Eigen::MatrixXd& F);

double reg_log_score_value(const Design& design, std::span<const double> z, double theta,
                           double sigma2, const Eigen::MatrixXd& F);

/// S_bar together with its split against the centered score,
///   value = base_score - r1 + (r2 + 2 r3 - r4) / sigma2,
/// where base_score is the centered score of y = z - F beta_ref.
struct RegressionScore {
  double value = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double r4 = 0.0;
  double base_score = 0.0;

  double recomposed(double sigma2) const { return base_score - r1 + (r2 + 2.0 * r3 - r4) / sigma2; }
};

/// `value` and `base_score` come from the fast paths; r1..r4 are evaluated
/// from their definitions with dense deleted-point solves (O(n^4), n <= 2000).
/// beta_ref defaults to zero, i.e. z is treated as if it were centered.
RegressionScore reg_log_score(const Design& design, std::span<const double> z, double theta,
                              double sigma2, const Eigen::MatrixXd& F,
                              std::optional<Eigen::VectorXd> beta_ref = std::nullopt);

/// GLS coefficients from z with point i (0-based) removed, dense.
Eigen::VectorXd loo_beta(const Design& design, std::span<const double> z, double theta,
                         const Eigen::MatrixXd& F, std::size_t i);

/// Leave-one-out predictions f_i' b_{-i} + r_{-i}' R_{-i}^{-1} (z_{-i} - F_{-i} b_{-i}),
/// built from loo_beta and deleted-point dense solves.
Eigen::VectorXd dense_loo_trend_predictions(const Design& design, std::span<const double> z,
                                            double theta, const Eigen::MatrixXd& F);

/// S_bar with Q materialized densely and predictions from
/// dense_loo_trend_predictions.
double dense_oracle_reg_score(const Design& design, std::span<const double> z, double theta,
                              double sigma2, const Eigen::MatrixXd& F);

/// Joint cross-validation estimate under the unknown-mean model.
EstimateResult estimate_cv_reg(const Design& design, std::span<const double> z,
                               const Eigen::MatrixXd& F, const ParameterBox& box);

}  // namespace oucv
