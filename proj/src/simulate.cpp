#include "oucv/simulate.hpp"

#include <cmath>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "oucv/error.hpp"
#include "oucv/numerics.hpp"

namespace oucv {

CovarianceParams CovarianceParams::make(double theta, double sigma2) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw InvalidParameter("theta must be positive and finite");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidParameter("sigma2 must be positive and finite");
  }
  return {theta, sigma2};
}

TrendBasis TrendBasis::polynomial(std::size_t degree) {
  std::vector<Function> fns;
  for (std::size_t k = 0; k <= degree; ++k) {
    fns.emplace_back([k](double t) { return std::pow(t, static_cast<double>(k)); });
  }
  return TrendBasis(std::move(fns), "polynomial:" + std::to_string(degree));
}

Eigen::MatrixXd TrendBasis::evaluate(const Design& design) const {
  const auto s = design.points();
  Eigen::MatrixXd F(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t k = 0; k < size(); ++k) {
      F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = functions_[k](s[i]);
    }
  }
  return F;
}

void require_full_column_rank(const Eigen::MatrixXd& F) {
  if (F.cols() < 1) throw LinearDependence("trend basis is empty");
  if (F.cols() >= F.rows()) {
    throw LinearDependence("trend basis needs fewer columns than points");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(F);
  qr.setThreshold(1e-10);
  if (qr.rank() < F.cols()) {
    throw LinearDependence("trend basis is rank deficient on the design (rank " +
                           std::to_string(qr.rank()) + " < " + std::to_string(F.cols()) + ")");
  }
}

std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t replicate) {
  // splitmix64 finalizer over a Weyl-sequence offset
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (replicate + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> sample_path(const Design& design, const CovarianceParams& params,
                                std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = design.size();
  std::vector<double> y(n);
  const double sd = std::sqrt(params.sigma2);
  y[0] = sd * normal(engine);
  for (std::size_t i = 1; i < n; ++i) {
    const double d = design.gap(i);
    const double rho = std::exp(-params.theta * d);
    const double innovation_sd = sd * std::sqrt(num::one_minus_exp(2.0 * params.theta * d));
    y[i] = rho * y[i - 1] + innovation_sd * normal(engine);
  }
  return y;
}

std::vector<double> sample_with_trend(const Design& design, const CovarianceParams& params,
                                      const TrendSpec& trend, std::uint64_t seed) {
  if (trend.beta.size() != trend.basis.size()) {
    throw InvalidParameter("trend coefficient count does not match the basis size");
  }
  const Eigen::MatrixXd F = trend.basis.evaluate(design);
  require_full_column_rank(F);
  auto z = sample_path(design, params, seed);
  const Eigen::VectorXd beta =
      Eigen::Map<const Eigen::VectorXd>(trend.beta.data(), static_cast<Eigen::Index>(trend.beta.size()));
  const Eigen::VectorXd mean = F * beta;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += mean(static_cast<Eigen::Index>(i));
  return z;
}

Eigen::MatrixXd covariance_matrix(const Design& design, double theta) {
  const auto n = static_cast<Eigen::Index>(design.size());
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    R(j, j) = 1.0;
    double dist = 0.0;
    for (Eigen::Index k = j + 1; k < n; ++k) {
      dist += design.gap(static_cast<std::size_t>(k));
      R(j, k) = R(k, j) = std::exp(-theta * dist);
    }
  }
  return R;
}

}  // namespace oucv
