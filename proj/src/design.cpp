#include "oucv/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oucv/error.hpp"

namespace oucv {

namespace {

constexpr double kSumTolerance = 1e-12;

std::vector<double> points_from_gaps(const std::vector<double>& gaps) {
  std::vector<double> points(gaps.size() + 1);
  points[0] = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    s += gaps[i];
    points[i + 1] = s;
  }
  points.back() = 1.0;
  return points;
}

// Sum from the smallest magnitude end; the factorial tails are decreasing.
double sum_ascending(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  return std::accumulate(sorted.begin(), sorted.end(), 0.0);
}

std::size_t floor_power(std::size_t n, double alpha) {
  // the epsilon keeps exact powers such as 16^0.5 from rounding down
  return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), alpha) + 1e-9));
}

}  // namespace

Design Design::from_points(std::vector<double> points) {
  const std::size_t n = points.size();
  if (n < 3) {
    throw InvalidDesign("a design needs at least 3 points, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double s = points[i];
    const std::size_t idx = i + 1;
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw InvalidDesign("point " + std::to_string(idx) + " is outside [0,1]", idx);
    }
    if (i == 0 && s != 0.0) {
      throw InvalidDesign("first point must be 0", idx);
    }
    if (i > 0) {
      if (s == points[i - 1]) {
        throw InvalidDesign("duplicate point at index " + std::to_string(idx), idx);
      }
      if (s < points[i - 1]) {
        throw InvalidDesign("points are not increasing at index " + std::to_string(idx), idx);
      }
    }
    if (i == n - 1 && s != 1.0) {
      throw InvalidDesign("last point must be 1", idx);
    }
  }
  std::vector<double> gaps(n - 1);
  for (std::size_t i = 1; i < n; ++i) gaps[i - 1] = points[i] - points[i - 1];
  return Design(std::move(points), std::move(gaps));
}

Design Design::from_gaps(std::vector<double> gaps) {
  if (gaps.size() < 2) {
    throw InvalidDesign("a design needs at least 3 points, got " + std::to_string(gaps.size() + 1));
  }
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (!(gaps[i] > 0.0) || !std::isfinite(gaps[i])) {
      // gap i sits to the left of point i+2 (1-based)
      throw InvalidDesign("nonpositive gap before point " + std::to_string(i + 2), i + 2);
    }
  }
  const double total = sum_ascending(gaps);
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidDesign("gaps sum to " + std::to_string(total) + " instead of 1");
  }
  auto points = points_from_gaps(gaps);
  return Design(std::move(points), std::move(gaps));
}

double Design::min_gap() const noexcept {
  return *std::min_element(gaps_.begin(), gaps_.end());
}

bool Design::points_resolved() const noexcept {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1])) return false;
  }
  return true;
}

Design Design::reversed() const {
  std::vector<double> gaps(gaps_.rbegin(), gaps_.rend());
  std::vector<double> points(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    points[i] = 1.0 - points_[points_.size() - 1 - i];
  }
  return Design(std::move(points), std::move(gaps));
}

Design regular_design(std::size_t n) {
  if (n < 3) {
    throw InvalidDesign("regular design needs n >= 3, got " + std::to_string(n));
  }
  const double h = 1.0 / static_cast<double>(n - 1);
  std::vector<double> gaps(n - 1, h);
  std::vector<double> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  }
  // exact points (i-1)/(n-1) rather than prefix sums
  return Design(std::move(points), std::move(gaps));
}

Design maximal_design(std::size_t n, double gamma) {
  if (n < 4) {
    throw InvalidDesign("maximal design needs n >= 4, got " + std::to_string(n));
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidParameter("gamma must lie in (0,1)");
  }
  const double dn = static_cast<double>(n);
  std::vector<double> gaps;
  gaps.reserve(n - 1);
  double used = 0.0;
  // 1-based gap index i = 2..n-1; even indices get the long gap
  for (std::size_t i = 2; i <= n - 1; ++i) {
    const double g = (i % 2 == 0) ? (1.0 - gamma) * 2.0 / dn : 2.0 * gamma / dn;
    gaps.push_back(g);
    used += g;
  }
  const double last = 1.0 - used;
  if (!(last > 0.0)) {
    throw InvalidDesign("closing gap is nonpositive", n);
  }
  gaps.push_back(last);
  return Design::from_gaps(std::move(gaps));
}

Design minimal_design(std::size_t n, double alpha) {
  if (n > 170) {
    throw OverflowGuard("minimal design needs n <= 170 (1/n! underflows binary64), got " +
                        std::to_string(n));
  }
  if (n < 5) {
    throw InvalidDesign("minimal design needs n >= 5, got " + std::to_string(n));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidParameter("alpha must lie in (0,1)");
  }
  const std::size_t m = floor_power(n, alpha);
  if (m < 2) {
    throw InvalidParameter("floor(n^alpha) must be at least 2");
  }
  // tail[i] = 1/i! for i = m+1..n, by repeated division
  std::vector<double> tail;
  tail.reserve(n - m);
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) {
    f /= static_cast<double>(i);
    if (i >= m + 1) tail.push_back(f);
  }
  const double r = sum_ascending(tail);
  const double head = (1.0 - r) / static_cast<double>(m - 1);
  std::vector<double> gaps(m - 1, head);
  gaps.insert(gaps.end(), tail.begin(), tail.end());
  return Design::from_gaps(std::move(gaps));
}

std::vector<double> minimal_design_log_gaps(std::size_t n, double alpha) {
  if (n < 5) {
    throw InvalidDesign("minimal design needs n >= 5, got " + std::to_string(n));
  }
  const std::size_t m = floor_power(n, alpha);
  if (m < 2) {
    throw InvalidParameter("floor(n^alpha) must be at least 2");
  }
  std::vector<double> log_gaps;
  log_gaps.reserve(n - 1);
  double r = 0.0;
  for (std::size_t i = n; i >= m + 1; --i) {
    r += std::exp(-std::lgamma(static_cast<double>(i) + 1.0));
  }
  const double head = std::log((1.0 - r) / static_cast<double>(m - 1));
  for (std::size_t i = 2; i <= m; ++i) log_gaps.push_back(head);
  for (std::size_t i = m + 1; i <= n; ++i) {
    log_gaps.push_back(-std::lgamma(static_cast<double>(i) + 1.0));
  }
  return log_gaps;
}

GapProfile gap_profile(const Design& design) {
  const std::size_t n = design.size();
  GapProfile profile;
  if (n < 4) return profile;
  auto d = design.gaps();  // d[k] = Delta_{k+2}
  profile.q.reserve(n - 3);
  profile.cross.reserve(n - 3);
  for (std::size_t i = 3; i <= n - 1; ++i) {
    const double prev = d[i - 3];
    const double cur = d[i - 2];
    const double next = d[i - 1];
    const double right = next / (cur + next);
    profile.q.push_back(right + prev / (cur + prev));
    // as a product of ratios so that factorial gaps do not underflow
    profile.cross.push_back(cur / (cur + next) * right);
  }
  return profile;
}

double tau_squared(const Design& design) {
  const std::size_t n = design.size();
  if (n < 5) {
    throw InvalidDesign("tau_squared needs n >= 5, got " + std::to_string(n));
  }
  const auto profile = gap_profile(design);
  double sum = 0.0;
  for (std::size_t k = 0; k < profile.q.size(); ++k) {
    sum += profile.q[k] * profile.q[k] + 2.0 * profile.cross[k];
  }
  return 2.0 / static_cast<double>(n) * sum;
}

double tau_squared_from_log_gaps(std::span<const double> log_gaps) {
  const std::size_t n = log_gaps.size() + 1;
  if (n < 5) {
    throw InvalidDesign("tau_squared needs n >= 5, got " + std::to_string(n));
  }
  // D_b/(D_a+D_b) = 1/(1 + exp(log D_a - log D_b))
  auto share = [](double log_a, double log_b) { return 1.0 / (1.0 + std::exp(log_a - log_b)); };
  double sum = 0.0;
  for (std::size_t i = 3; i <= n - 1; ++i) {
    const double prev = log_gaps[i - 3];
    const double cur = log_gaps[i - 2];
    const double next = log_gaps[i - 1];
    const double q = share(cur, next) + share(cur, prev);
    const double w = share(cur, next);
    const double cross = w * (1.0 - w);
    sum += q * q + 2.0 * cross;
  }
  return 2.0 / static_cast<double>(n) * sum;
}

}  // namespace oucv
