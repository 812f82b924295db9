#include "oucv/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "oucv/error.hpp"

namespace oucv {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt 5 - 1) / 2

double finite_or_inf(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

ParameterBox ParameterBox::make(double theta_lo, double theta_hi, double sigma2_lo,
                                double sigma2_hi) {
  auto ok = [](double lo, double hi) {
    return std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && lo <= hi;
  };
  if (!ok(theta_lo, theta_hi)) throw InvalidParameter("theta bounds must satisfy 0 < a <= A");
  if (!ok(sigma2_lo, sigma2_hi)) throw InvalidParameter("sigma2 bounds must satisfy 0 < b <= B");
  return {theta_lo, theta_hi, sigma2_lo, sigma2_hi};
}

std::string BoundaryFlags::str() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '|';
    out += name;
  };
  add(theta_lo, "theta_lo");
  add(theta_hi, "theta_hi");
  add(sigma2_lo, "sigma2_lo");
  add(sigma2_hi, "sigma2_hi");
  return out.empty() ? "none" : out;
}

ScalarMinimum minimize_log_grid_golden(const std::function<double(double)>& f, double lo,
                                       double hi, int nodes, double rel_tol) {
  if (!(lo > 0.0) || !(lo <= hi)) throw InvalidParameter("search interval must satisfy 0 < lo <= hi");
  if (lo == hi) {
    const double v = f(lo);
    if (!std::isfinite(v)) throw NumericalFailure("nonfinite objective", lo);
    return {lo, v, 0};
  }
  nodes = std::max(nodes, 3);
  std::vector<double> xs(static_cast<std::size_t>(nodes));
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / (nodes - 1);
  for (int k = 0; k < nodes; ++k) xs[static_cast<std::size_t>(k)] = std::exp(log_lo + k * step);
  xs.front() = lo;
  xs.back() = hi;

  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double v = f(xs[k]);
    if (!std::isfinite(v)) {
      throw NumericalFailure("nonfinite objective at theta = " + std::to_string(xs[k]), xs[k]);
    }
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }

  ScalarMinimum result{xs[best], best_value, 0};
  double a = xs[best == 0 ? 0 : best - 1];
  double b = xs[std::min(best + 1, xs.size() - 1)];

  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = finite_or_inf(f(x1));
  double f2 = finite_or_inf(f(x2));
  int it = 0;
  auto consider = [&](double x, double v) {
    if (v < result.value || (v == result.value && x < result.x)) {
      result.x = x;
      result.value = v;
    }
  };
  consider(x1, f1);
  consider(x2, f2);
  while (b - a > rel_tol * 0.5 * (a + b) && it < kMaxGoldenIterations) {
    ++it;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = finite_or_inf(f(x1));
      consider(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = finite_or_inf(f(x2));
      consider(x2, f2);
    }
  }
  result.iterations = it;
  return result;
}

double profile_sigma2(const ScoreDecomposition& decomp, const ParameterBox& box) {
  return std::clamp(decomp.stationary_sigma2(), box.sigma2_lo, box.sigma2_hi);
}

EstimateResult estimate_profile(const std::function<ScoreDecomposition(double)>& decompose,
                                const ParameterBox& box,
                                const std::function<double(double, double)>& gradient) {
  auto profile = [&](double theta) {
    const auto d = decompose(theta);
    return d.at(profile_sigma2(d, box));
  };
  const auto best = minimize_log_grid_golden(profile, box.theta_lo, box.theta_hi);

  EstimateResult r;
  r.theta_hat = best.x;
  const auto d = decompose(r.theta_hat);
  const double stationary = d.stationary_sigma2();
  r.sigma2_hat = profile_sigma2(d, box);
  r.product = r.theta_hat * r.sigma2_hat;
  r.objective_value = d.at(r.sigma2_hat);
  r.iterations = best.iterations;
  r.flags.theta_lo = r.theta_hat <= box.theta_lo;
  r.flags.theta_hi = r.theta_hat >= box.theta_hi;
  r.flags.sigma2_lo = stationary <= box.sigma2_lo;
  r.flags.sigma2_hi = stationary >= box.sigma2_hi;
  if (gradient) {
    r.gradient_at_opt = gradient(r.theta_hat, r.sigma2_hat);
  } else {
    const double h = 1e-5 * r.theta_hat;
    r.gradient_at_opt =
        (decompose(r.theta_hat + h).at(r.sigma2_hat) - decompose(r.theta_hat - h).at(r.sigma2_hat)) /
        (2.0 * h);
  }
  return r;
}

EstimateResult estimate_cv_joint(const Design& design, std::span<const double> y,
                                 const ParameterBox& box) {
  return estimate_profile([&](double theta) { return score_decomposition(design, y, theta); }, box,
                          [&](double theta, double sigma2) {
                            return score_gradient_theta(design, y, theta, sigma2);
                          });
}

EstimateResult estimate_cv_fixed_sigma(const Design& design, std::span<const double> y,
                                       double sigma1_sq, double theta_lo, double theta_hi) {
  const auto box = ParameterBox::make(theta_lo, theta_hi, sigma1_sq, sigma1_sq);
  const auto best = minimize_log_grid_golden(
      [&](double theta) { return log_score(design, y, theta, sigma1_sq); }, box.theta_lo,
      box.theta_hi);
  EstimateResult r;
  r.theta_hat = best.x;
  r.sigma2_hat = sigma1_sq;
  r.product = r.theta_hat * r.sigma2_hat;
  r.objective_value = best.value;
  r.iterations = best.iterations;
  r.flags.theta_lo = r.theta_hat <= theta_lo;
  r.flags.theta_hi = r.theta_hat >= theta_hi;
  r.gradient_at_opt = score_gradient_theta(design, y, r.theta_hat, sigma1_sq);
  return r;
}

EstimateResult estimate_cv_fixed_theta(const Design& design, std::span<const double> y,
                                       double theta2, double sigma2_lo, double sigma2_hi) {
  const auto box = ParameterBox::make(theta2, theta2, sigma2_lo, sigma2_hi);
  const auto d = score_decomposition(design, y, theta2);
  EstimateResult r;
  r.theta_hat = theta2;
  r.sigma2_hat = profile_sigma2(d, box);
  r.product = r.theta_hat * r.sigma2_hat;
  r.objective_value = d.at(r.sigma2_hat);
  r.flags.sigma2_lo = d.stationary_sigma2() <= sigma2_lo;
  r.flags.sigma2_hi = d.stationary_sigma2() >= sigma2_hi;
  r.gradient_at_opt = score_gradient_theta(design, y, theta2, r.sigma2_hat);
  return r;
}

EstimateResult estimate_ml_joint(const Design& design, std::span<const double> y,
                                 const ParameterBox& box) {
  return estimate_profile([&](double theta) { return ml_decomposition(design, y, theta); }, box,
                          [&](double theta, double sigma2) {
                            return ml_gradient_theta(design, y, theta, sigma2);
                          });
}

double standardized_statistic(double product_hat, double true_product, std::size_t n, double tau) {
  return std::sqrt(static_cast<double>(n)) * (product_hat - true_product) / (true_product * tau);
}

}  // namespace oucv
