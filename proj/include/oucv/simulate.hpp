#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oucv/design.hpp"

namespace oucv {

/// Exponential covariance sigma2 * exp(-theta |t - u|).
struct CovarianceParams {
  double theta;
  double sigma2;

  /// Throws InvalidParameter unless both entries are finite and positive.
  static CovarianceParams make(double theta, double sigma2);
};

/// Trend basis functions f_1..f_p on [0,1].
class TrendBasis {
 public:
  using Function = std::function<double(double)>;

  TrendBasis() = default;
  TrendBasis(std::vector<Function> functions, std::string name)
      : functions_(std::move(functions)), name_(std::move(name)) {}

  /// Monomials 1, t, ..., t^degree.
  static TrendBasis polynomial(std::size_t degree);

  std::size_t size() const noexcept { return functions_.size(); }
  const std::string& name() const noexcept { return name_; }

  /// The n x p matrix [f_k(s_i)].
  Eigen::MatrixXd evaluate(const Design& design) const;

 private:
  std::vector<Function> functions_;
  std::string name_;
};

struct TrendSpec {
  std::vector<double> beta;
  TrendBasis basis;
};

/// Throws LinearDependence unless F has full column rank p < n, using a
/// column-pivoted QR with threshold 1e-10 relative to the largest pivot.
void require_full_column_rank(const Eigen::MatrixXd& F);

/// Seed of the random stream for replicate `replicate` under `base_seed`.
/// Distinct replicates get decorrelated streams; the mapping does not depend
/// on execution order.
std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t replicate);

/// Exact draw of (Y(s_1), ..., Y(s_n)) through the Markov recursion
/// y_i = e^{-theta D_i} y_{i-1} + sqrt(sigma2 (1 - e^{-2 theta D_i})) eps_i.
std::vector<double> sample_path(const Design& design, const CovarianceParams& params,
                                std::uint64_t seed);

/// z_i = sum_k beta_k f_k(s_i) + y_i, with y from sample_path(seed).
std::vector<double> sample_with_trend(const Design& design, const CovarianceParams& params,
                                      const TrendSpec& trend, std::uint64_t seed);

/// Dense correlation matrix exp(-theta |s_j - s_k|). Distances are
/// accumulated from gaps so that tiny gaps survive.
Eigen::MatrixXd covariance_matrix(const Design& design, double theta);

}  // namespace oucv
