#include <cmath>
#include <numbers>
#include <string>

#include "oucv/error.hpp"
#include "oucv/scoring.hpp"
#include "oucv/simulate.hpp"

namespace oucv {

namespace {

// Reciprocal condition estimate below which R_theta is treated as singular.
constexpr double kMinRcond = 1e-11;

Eigen::LLT<Eigen::MatrixXd> factor(const Design& design, double theta) {
  if (design.size() > kDenseOracleMaxSize) {
    throw InvalidParameter("dense oracle limited to n <= " + std::to_string(kDenseOracleMaxSize));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_matrix(design, theta));
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("Cholesky factorization of the correlation matrix failed");
  }
  const double rc = llt.rcond();
  if (!(rc >= kMinRcond)) {
    throw ConditioningError("correlation matrix is numerically singular (rcond " +
                            std::to_string(rc) + ")");
  }
  return llt;
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> y) {
  return {y.data(), static_cast<Eigen::Index>(y.size())};
}

}  // namespace

Eigen::MatrixXd dense_precision(const Design& design, double theta) {
  const auto llt = factor(design, theta);
  const auto n = static_cast<Eigen::Index>(design.size());
  return llt.solve(Eigen::MatrixXd::Identity(n, n));
}

double dense_oracle_score(const Design& design, std::span<const double> y, double theta,
                          double sigma2) {
  if (y.size() != design.size()) throw InvalidParameter("data length does not match design");
  const Eigen::MatrixXd P = dense_precision(design, theta);
  const auto yv = as_vector(y);
  const auto n = static_cast<Eigen::Index>(y.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double pred = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) pred -= P(i, j) * yv(j);
    }
    pred /= P(i, i);
    const double var = sigma2 / P(i, i);
    const double resid = yv(i) - pred;
    total += std::log(var) + resid * resid / var;
  }
  return total;
}

double dense_oracle_ml(const Design& design, std::span<const double> y, double theta,
                       double sigma2) {
  if (y.size() != design.size()) throw InvalidParameter("data length does not match design");
  const auto llt = factor(design, theta);
  const auto yv = as_vector(y);
  const double n = static_cast<double>(y.size());
  const Eigen::MatrixXd L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double quad = yv.dot(llt.solve(Eigen::VectorXd(yv)));
  return n * std::log(2.0 * std::numbers::pi * sigma2) + logdet + quad / sigma2;
}

}  // namespace oucv
