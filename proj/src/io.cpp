#include "oucv/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oucv/error.hpp"

namespace oucv {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::size_t to_size(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidParameter("cannot parse " + what + " from '" + s + "'");
  }
  return v;
}

double to_double_or_throw(const std::string& s, const std::string& what) {
  const auto v = to_double(s);
  if (!v) throw InvalidParameter("cannot parse " + what + " from '" + s + "'");
  return *v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DesignSpec DesignSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  DesignSpec spec;
  if (kind == "file") {
    if (rest.empty()) throw InvalidParameter("file design needs a path");
    spec.kind = Kind::File;
    spec.path = rest;
    return spec;
  }
  const auto parts = split(rest, ':');
  if (parts.empty() || parts[0].empty()) throw InvalidParameter("design spec '" + text + "' lacks n");
  spec.n = to_size(parts[0], "n");
  if (kind == "regular") {
    spec.kind = Kind::Regular;
    if (parts.size() > 1) throw InvalidParameter("regular design takes only n");
  } else if (kind == "maximal") {
    spec.kind = Kind::Maximal;
    if (parts.size() > 1) spec.gamma = to_double_or_throw(parts[1], "gamma");
  } else if (kind == "minimal") {
    spec.kind = Kind::Minimal;
    if (parts.size() > 1) spec.alpha = to_double_or_throw(parts[1], "alpha");
  } else {
    throw InvalidParameter("unknown design kind '" + kind + "'");
  }
  return spec;
}

std::string DesignSpec::str() const {
  switch (kind) {
    case Kind::Regular:
      return "regular:" + std::to_string(n);
    case Kind::Maximal:
      return "maximal:" + std::to_string(n) + (gamma ? ":" + format_double(*gamma) : "");
    case Kind::Minimal:
      return "minimal:" + std::to_string(n) + (alpha ? ":" + format_double(*alpha) : "");
    case Kind::File:
      return "file:" + path.string();
  }
  return {};
}

Design DesignSpec::build() const {
  switch (kind) {
    case Kind::Regular:
      return regular_design(n);
    case Kind::Maximal:
      return maximal_design(n, gamma.value_or(1.0 / static_cast<double>(n)));
    case Kind::Minimal:
      return minimal_design(n, alpha.value_or(0.5));
    case Kind::File:
      return Design::from_points(read_points_file(path));
  }
  throw InvalidParameter("unknown design kind");
}

std::vector<double> read_points_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<double> points;
  std::string line;
  bool first = true;
  std::optional<std::size_t> s_col;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line, ',');
    std::optional<double> v;
    if (s_col) {
      if (*s_col < cells.size()) v = to_double(cells[*s_col]);
    } else {
      for (const auto& c : cells) {
        if ((v = to_double(c))) break;
      }
    }
    if (!v) {
      if (first) {
        first = false;
        for (std::size_t k = 0; k < cells.size(); ++k) {
          if (cells[k] == "s") s_col = k;
        }
        continue;  // header
      }
      throw InvalidParameter("non-numeric line in " + path.string() + ": " + line);
    }
    first = false;
    points.push_back(*v);
  }
  return points;
}

void write_design_csv(std::ostream& out, const Design& design) {
  out << "index,s,delta\n";
  const auto s = design.points();
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << (i + 1) << ',' << format_double(s[i]) << ',';
    if (i > 0) out << format_double(design.gap(i));
    out << '\n';
  }
}

void write_series_csv(std::ostream& out, const Design& design, const std::vector<double>& values,
                      const std::string& value_name) {
  out << "index,s," << value_name << '\n';
  const auto s = design.points();
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << (i + 1) << ',' << format_double(s[i]) << ',' << format_double(values[i]) << '\n';
  }
}

SeriesData read_series_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidParameter(path.string() + " is empty");
  const auto header = split(line, ',');
  std::size_t s_col = header.size();
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "s") s_col = k;
  }
  if (s_col == header.size() || header.size() < 2) {
    throw InvalidParameter(path.string() + " needs a header with an 's' column and a value column");
  }
  const std::size_t v_col = header.size() - 1;
  SeriesData data;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw InvalidParameter(path.string() + ": wrong column count on line " + std::to_string(row));
    }
    data.points.push_back(to_double_or_throw(cells[s_col], "s on line " + std::to_string(row)));
    data.values.push_back(to_double_or_throw(cells[v_col], "value on line " + std::to_string(row)));
  }
  return data;
}

TrendConfig TrendConfig::parse_basis(const std::string& text) {
  const std::string prefix = "polynomial:";
  if (text.rfind(prefix, 0) != 0) {
    throw InvalidParameter("unknown trend basis '" + text + "' (expected polynomial:K)");
  }
  TrendConfig cfg;
  cfg.polynomial_degree = to_size(text.substr(prefix.size()), "polynomial degree");
  return cfg;
}

TrendConfig TrendConfig::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter("malformed trend config " + path.string() + ": " + e.what());
  }
  TrendConfig cfg;
  if (j.contains("basis")) {
    cfg = parse_basis(j.at("basis").get<std::string>());
  } else if (j.contains("columns")) {
    std::filesystem::path cols = j.at("columns").get<std::string>();
    cfg.columns_path = cols.is_absolute() ? cols : path.parent_path() / cols;
  } else {
    throw InvalidParameter("trend config needs 'basis' or 'columns'");
  }
  if (j.contains("beta")) cfg.beta = j.at("beta").get<std::vector<double>>();
  return cfg;
}

Eigen::MatrixXd TrendConfig::matrix(const Design& design) const {
  if (polynomial_degree) return TrendBasis::polynomial(*polynomial_degree).evaluate(design);
  auto in = open_input(columns_path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line, ',');
    std::vector<double> row;
    bool numeric = true;
    for (const auto& c : cells) {
      const auto v = to_double(c);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw InvalidParameter("non-numeric row in " + columns_path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != design.size()) {
    throw InvalidParameter("trend columns file has " + std::to_string(rows.size()) +
                           " rows for " + std::to_string(design.size()) + " points");
  }
  const auto p = rows.front().size();
  Eigen::MatrixXd F(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) throw InvalidParameter("ragged trend columns file");
    for (std::size_t k = 0; k < p; ++k) {
      F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return F;
}

TrendSpec TrendConfig::spec() const {
  if (!polynomial_degree) {
    throw InvalidParameter("simulation needs a built-in trend basis (polynomial:K)");
  }
  TrendSpec spec{beta, TrendBasis::polynomial(*polynomial_degree)};
  if (spec.beta.size() != spec.basis.size()) {
    throw InvalidParameter("trend needs " + std::to_string(spec.basis.size()) + " coefficients");
  }
  return spec;
}

}  // namespace oucv
