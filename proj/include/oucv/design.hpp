#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace oucv {

/// Sorted observation points 0 = s_1 < ... < s_n = 1 on the unit interval.
///
/// The gap vector is the authoritative representation: gap(i) is the
/// distance between point i-1 and point i (0-based, i = 1..n-1). Every
/// numerical routine in the library reads gaps, never point differences, so
/// designs whose gaps fall below the resolution of binary64 near 1 (the
/// factorial designs) keep their exact spacing. Designs built from points
/// carry gaps recomputed from those points, bitwise.
class Design {
 public:
  /// Validates a caller-sorted point vector. Throws InvalidDesign naming the
  /// 1-based index of the first violation.
  static Design from_points(std::vector<double> points);

  /// Builds a design from its n-1 gaps. Throws InvalidDesign when a gap is
  /// not strictly positive or the gaps do not sum to 1 within 1e-12.
  static Design from_gaps(std::vector<double> gaps);

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> gaps() const noexcept { return gaps_; }

  /// Gap to the left of point i (0-based), 1 <= i < size().
  double gap(std::size_t i) const noexcept { return gaps_[i - 1]; }
  double min_gap() const noexcept;

  /// False when some adjacent points coincide in binary64 although their
  /// gap is positive (factorial designs beyond roughly n = 18).
  bool points_resolved() const noexcept;

  /// The mirrored design s_i -> 1 - s_{n+1-i}.
  Design reversed() const;

 private:
  Design(std::vector<double> points, std::vector<double> gaps)
      : points_(std::move(points)), gaps_(std::move(gaps)) {}

  std::vector<double> points_;
  std::vector<double> gaps_;

  friend Design regular_design(std::size_t n);
};

/// Equispaced points {0, 1/(n-1), ..., 1}. Requires n >= 3.
Design regular_design(std::size_t n);

/// Alternating long/short gaps (1-gamma)2/n and 2gamma/n for the first n-2
/// gaps; the last gap closes the interval. Asymptotically maximizes the
/// cross-validation variance when gamma = 1/n. Requires n >= 4.
Design maximal_design(std::size_t n, double gamma);

/// Factorial gaps 1/i! for i > floor(n^alpha), equal gaps before that.
/// Asymptotically attains the minimal variance. Requires 5 <= n <= 170 and
/// floor(n^alpha) >= 2.
Design minimal_design(std::size_t n, double alpha);

/// Above this size the points of a minimal design are no longer resolvable
/// in binary64; callers are expected to warn.
inline constexpr std::size_t kMinimalDesignWarnAbove = 20;

/// Natural logarithms of the minimal-design gaps, without the n <= 170 cap.
/// Used to evaluate tau_squared for very large n where 1/i! underflows.
std::vector<double> minimal_design_log_gaps(std::size_t n, double alpha);

/// Per-point quantities entering the design variance, i = 3..n-1 (1-based):
/// q_i = D_{i+1}/(D_i+D_{i+1}) + D_{i-1}/(D_i+D_{i-1}) and
/// c_i = D_i D_{i+1}/(D_i+D_{i+1})^2.
struct GapProfile {
  std::vector<double> q;
  std::vector<double> cross;
};

GapProfile gap_profile(const Design& design);

/// Asymptotic variance factor of the standardized cross-validation estimator,
/// (2/n) sum_{i=3}^{n-1} [q_i^2 + 2 c_i]. Requires n >= 5.
double tau_squared(const Design& design);

/// Same quantity from log-gaps; only gap ratios matter, so this form works
/// when the gaps themselves underflow.
double tau_squared_from_log_gaps(std::span<const double> log_gaps);

}  // namespace oucv
