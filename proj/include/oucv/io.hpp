#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oucv/design.hpp"
#include "oucv/simulate.hpp"

namespace oucv {

/// Shortest-safe text for a double: 17 significant digits, round-trips exactly.
std::string format_double(double v);

/// Which family a design comes from and its parameters. Text form:
/// "regular:N", "maximal:N[:GAMMA]" (GAMMA defaults to 1/N),
/// "minimal:N[:ALPHA]" (ALPHA defaults to 0.5) or "file:PATH".
struct DesignSpec {
  enum class Kind { Regular, Maximal, Minimal, File };
  Kind kind = Kind::Regular;
  std::size_t n = 0;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::filesystem::path path;

  static DesignSpec parse(const std::string& text);
  std::string str() const;
  Design build() const;
};

/// Reads one point per line. With a header naming an `s` column that column
/// is used, otherwise the first numeric column; other columns are ignored.
std::vector<double> read_points_file(const std::filesystem::path& path);

/// CSV `index,s,delta` followed by nothing else; delta is empty on row 1.
void write_design_csv(std::ostream& out, const Design& design);

/// CSV `index,s,<value_name>`.
void write_series_csv(std::ostream& out, const Design& design, const std::vector<double>& values,
                      const std::string& value_name);

/// Reads a CSV with a header containing an `s` column; the value column is
/// the last column. Returns (points, values).
struct SeriesData {
  std::vector<double> points;
  std::vector<double> values;
};
SeriesData read_series_csv(const std::filesystem::path& path);

/// Trend configuration file (JSON):
///   {"basis": "polynomial:K", "beta": [..]}   or
///   {"columns": "path/to/F.csv", "beta": [..]}
/// `beta` is optional for estimation. A columns file holds one row per
/// design point and one column per basis function.
struct TrendConfig {
  std::optional<std::size_t> polynomial_degree;
  std::filesystem::path columns_path;
  std::vector<double> beta;

  static TrendConfig parse_basis(const std::string& text);  // "polynomial:K"
  static TrendConfig load(const std::filesystem::path& path);
  Eigen::MatrixXd matrix(const Design& design) const;
  /// Only available for built-in bases.
  TrendSpec spec() const;
};

}  // namespace oucv
