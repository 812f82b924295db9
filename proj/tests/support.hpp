#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oucv/design.hpp"
#include "oucv/simulate.hpp"

namespace oucv::testing {

/// Design with Dirichlet(1, ..., 1) gaps.
inline Design dirichlet_design(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> g(n - 1);
  double total = 0.0;
  for (auto& v : g) total += (v = expo(rng));
  for (auto& v : g) v /= total;
  return Design::from_gaps(std::move(g));
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

inline std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Instance {
  Design design;
  std::vector<double> y;
  double theta;
  double sigma2;
};

/// Random design in [n_lo, n_hi], theta in [0.1, 10], sigma2 in [0.3, 30] and
/// a path simulated from those parameters.
inline Instance random_instance(std::mt19937_64& rng, std::size_t n_lo, std::size_t n_hi) {
  auto design = dirichlet_design(uniform_size(rng, n_lo, n_hi), rng);
  const double theta = log_uniform(rng, 0.1, 10.0);
  const double sigma2 = log_uniform(rng, 0.3, 30.0);
  auto y = sample_path(design, CovarianceParams::make(theta, sigma2), rng());
  return {std::move(design), std::move(y), theta, sigma2};
}

/// Random smooth basis matrix with p columns: monomials up to p - 1 with a
/// random affine change of variable.
inline Eigen::MatrixXd random_basis(const Design& design, std::size_t p, std::mt19937_64& rng) {
  const double shift = uniform(rng, -1.0, 1.0);
  Eigen::MatrixXd F(static_cast<Eigen::Index>(design.size()), static_cast<Eigen::Index>(p));
  const auto s = design.points();
  for (std::size_t i = 0; i < s.size(); ++i) {
    double v = 1.0;
    for (std::size_t k = 0; k < p; ++k) {
      F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      v *= s[i] + shift;
    }
  }
  return F;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace oucv::testing
