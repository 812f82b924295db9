#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oucv/error.hpp"
#include "oucv/estimation.hpp"
#include "oucv/simulate.hpp"
#include "support.hpp"

using namespace oucv;
using oucv::testing::random_instance;

namespace {

const ParameterBox kBox = ParameterBox::make(0.1, 10.0, 0.3, 30.0);

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<double> simulate(const Design& d, std::uint64_t seed) {
  return sample_path(d, CovarianceParams::make(3.0, 1.0), seed);
}

}  // namespace

TEST_CASE("parameter box validation") {
  CHECK_THROWS_AS(ParameterBox::make(0.0, 1.0, 1.0, 2.0), InvalidParameter);
  CHECK_THROWS_AS(ParameterBox::make(2.0, 1.0, 1.0, 2.0), InvalidParameter);
  CHECK_THROWS_AS(ParameterBox::make(1.0, 2.0, 3.0, 2.0), InvalidParameter);
  CHECK_NOTHROW(ParameterBox::make(1.0, 1.0, 2.0, 2.0));
}

TEST_CASE("profile variance is the clamped stationary point") {
  ScoreDecomposition d;
  d.n = 40;
  d.Q = 40 * 5.0;
  CHECK(profile_sigma2(d, kBox) == 5.0);
  d.Q = 40 * 100.0;
  CHECK(profile_sigma2(d, kBox) == 30.0);
  d.Q = 40 * 0.01;
  CHECK(profile_sigma2(d, kBox) == 0.3);

  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto inst = random_instance(rng, 3, 100);
    const auto dec = score_decomposition(inst.design, inst.y, inst.theta);
    const double best = dec.at(profile_sigma2(dec, kBox));
    for (int k = 0; k < 20; ++k) {
      CHECK(best <= dec.at(oucv::testing::uniform(rng, kBox.sigma2_lo, kBox.sigma2_hi)));
    }
  }
}

TEST_CASE("grid and golden section") {
  const auto m = minimize_log_grid_golden([](double x) { return (std::log(x) - 1.0) * (std::log(x) - 1.0); },
                                          0.1, 10.0);
  CHECK(m.x == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
  CHECK(m.iterations <= kMaxGoldenIterations);

  const auto flat = minimize_log_grid_golden([](double) { return 1.0; }, 0.5, 5.0);
  CHECK(flat.x == 0.5);

  try {
    minimize_log_grid_golden([](double x) { return x > 2.0 ? std::nan("") : x; }, 0.1, 10.0);
    FAIL("nonfinite grid value accepted");
  } catch (const NumericalFailure& e) {
    REQUIRE(e.theta().has_value());
    CHECK(*e.theta() > 2.0);
  }
}

TEST_CASE("joint CV estimates are optimal and stationary") {
  std::mt19937_64 rng(7);
  int interior = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto inst = random_instance(rng, 5, 200);
    const auto& d = inst.design;
    const auto r = estimate_cv_joint(d, inst.y, kBox);
    const double n = static_cast<double>(d.size());

    CHECK(r.product == r.theta_hat * r.sigma2_hat);
    CHECK(std::isfinite(r.objective_value));
    CHECK(r.theta_hat >= kBox.theta_lo);
    CHECK(r.theta_hat <= kBox.theta_hi);
    CHECK(r.sigma2_hat >= kBox.sigma2_lo);
    CHECK(r.sigma2_hat <= kBox.sigma2_hi);
    CHECK(r.iterations <= kMaxGoldenIterations);
    CHECK(r.objective_value == doctest::Approx(log_score(d, inst.y, r.theta_hat, r.sigma2_hat)).epsilon(1e-12));

    for (int k = 0; k < 64; ++k) {
      const double theta = std::exp(std::log(0.1) + k * (std::log(100.0) / 63));
      const auto dec = score_decomposition(d, inst.y, theta);
      CHECK(r.objective_value <= dec.at(profile_sigma2(dec, kBox)) + 1e-12 * std::abs(r.objective_value));
    }
    for (int a = 0; a < 32; ++a) {
      const double theta = kBox.theta_lo + a * (kBox.theta_hi - kBox.theta_lo) / 31;
      for (int b = 0; b < 32; ++b) {
        const double s2 = kBox.sigma2_lo + b * (kBox.sigma2_hi - kBox.sigma2_lo) / 31;
        CHECK(r.objective_value <= log_score(d, inst.y, theta, s2) + 1e-12 * std::abs(r.objective_value));
      }
    }
    if (!r.flags.any()) {
      ++interior;
      CHECK(std::abs(r.gradient_at_opt) <= 1e-6 * n);
      const auto dec = score_decomposition(d, inst.y, r.theta_hat);
      const double dsigma = n / r.sigma2_hat - dec.Q / (r.sigma2_hat * r.sigma2_hat);
      CHECK(std::abs(dsigma) <= 1e-6 * n);
    }
  }
  CHECK(interior > 0);
}

TEST_CASE("joint CV at n = 200 concentrates around the product") {
  const auto d = regular_design(200);
  int close = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto y = simulate(d, replicate_seed(101, r));
    close += std::abs(estimate_cv_joint(d, y, kBox).product - 3.0) <= 0.75 ? 1 : 0;
  }
  CHECK(close >= 190);
}

TEST_CASE("collapsed boxes return the point") {
  const auto d = regular_design(30);
  const auto y = simulate(d, 3);
  const auto pt = ParameterBox::make(2.0, 2.0, 0.7, 0.7);
  const auto cv = estimate_cv_joint(d, y, pt);
  CHECK(cv.theta_hat == 2.0);
  CHECK(cv.sigma2_hat == 0.7);
  CHECK(cv.objective_value == doctest::Approx(log_score(d, y, 2.0, 0.7)).epsilon(1e-13));
  const auto ml = estimate_ml_joint(d, y, pt);
  CHECK(ml.theta_hat == 2.0);
  CHECK(ml.sigma2_hat == 0.7);
  CHECK(ml.objective_value == doctest::Approx(ml_neg2loglik(d, y, 2.0, 0.7)).epsilon(1e-13));
}

TEST_CASE("fixed variance case") {
  const auto d = regular_design(800);
  std::vector<double> dev_same;
  std::vector<double> dev_half;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto y = simulate(d, replicate_seed(202, r));
    dev_same.push_back(std::abs(estimate_cv_fixed_sigma(d, y, 1.0, 0.1, 10.0).theta_hat - 3.0));
    dev_half.push_back(std::abs(estimate_cv_fixed_sigma(d, y, 0.5, 0.1, 10.0).theta_hat - 6.0));
  }
  CHECK(median(dev_same) < 0.4);
  CHECK(median(dev_half) < 0.4);

  const auto small = regular_design(60);
  const auto y = simulate(small, 5);
  std::vector<double> y2(y);
  for (auto& v : y2) v *= 2.0;
  const auto a = estimate_cv_fixed_sigma(small, y, 0.8, 0.1, 10.0);
  const auto b = estimate_cv_fixed_sigma(small, y2, 0.8 * 4.0, 0.1, 10.0);
  CHECK(a.theta_hat == doctest::Approx(b.theta_hat).epsilon(1e-7));
  CHECK(a.sigma2_hat == 0.8);
}

TEST_CASE("fixed theta case") {
  const auto d = regular_design(800);
  std::vector<double> dev;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto y = simulate(d, replicate_seed(303, r));
    dev.push_back(std::abs(estimate_cv_fixed_theta(d, y, 3.0, 0.3, 30.0).sigma2_hat - 1.0));
  }
  CHECK(median(dev) < 0.15);

  const auto small = regular_design(40);
  auto y = simulate(small, 8);
  const auto joint = estimate_cv_joint(small, y, ParameterBox::make(3.0, 3.0, 0.3, 30.0));
  const auto fixed = estimate_cv_fixed_theta(small, y, 3.0, 0.3, 30.0);
  CHECK(fixed.sigma2_hat == joint.sigma2_hat);
  CHECK(fixed.objective_value == joint.objective_value);

  for (auto& v : y) v *= 1e-3;
  const auto low = estimate_cv_fixed_theta(small, y, 3.0, 0.3, 30.0);
  CHECK(low.sigma2_hat == 0.3);
  CHECK(low.flags.sigma2_lo);
  CHECK(low.flags.str() == "sigma2_lo");
}

TEST_CASE("ML estimates are stationary when interior") {
  const auto d = regular_design(200);
  int interior = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto y = simulate(d, replicate_seed(404, r));
    const auto m = estimate_ml_joint(d, y, kBox);
    CHECK(m.product == m.theta_hat * m.sigma2_hat);
    if (!m.flags.any()) {
      ++interior;
      CHECK(std::abs(m.gradient_at_opt) <= 1e-6 * 200);
    }
  }
  CHECK(interior > 0);
}

TEST_CASE("standardized statistic") {
  CHECK(standardized_statistic(3.0, 3.0, 200, 1.72) == 0.0);
  const double hat = 3.0 * (1.0 + 1.72 / std::sqrt(200.0));
  CHECK(standardized_statistic(hat, 3.0, 200, 1.72) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("boundary flag text") {
  BoundaryFlags f;
  CHECK(f.str() == "none");
  f.theta_hi = true;
  f.sigma2_lo = true;
  CHECK(f.str() == "theta_hi|sigma2_lo");
  CHECK_FALSE(f.theta_interior());
  CHECK_FALSE(f.sigma2_interior());
}
