#include "oucv/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "oucv/error.hpp"
#include "oucv/regression.hpp"
#include "oucv/simulate.hpp"

namespace oucv {

namespace {

constexpr std::size_t kMaxBins = 10000;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw InvalidParameter("config key '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::vector<double> parse_numbers(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number(key, item));
  return out;
}

ParameterBox parse_box(const std::vector<double>& v) {
  if (v.size() != 4) throw InvalidParameter("box needs four values a,A,b,B");
  return ParameterBox::make(v[0], v[1], v[2], v[3]);
}

// Applies one key of a config, value given as text.
void apply_key(ExperimentConfig& cfg, std::vector<double>& beta, std::string& trend_basis,
               const std::string& key, const std::string& value) {
  if (key == "name") {
    cfg.name = value;
  } else if (key == "design") {
    cfg.design = DesignSpec::parse(value);
  } else if (key == "theta0") {
    cfg.theta0 = parse_number(key, value);
  } else if (key == "sigma0_sq") {
    cfg.sigma0_sq = parse_number(key, value);
  } else if (key == "replicates") {
    const double r = parse_number(key, value);
    if (!(r >= 1.0) || r != std::floor(r)) throw InvalidParameter("replicates must be a positive integer");
    cfg.replicates = static_cast<std::size_t>(r);
  } else if (key == "box") {
    cfg.box = parse_box(parse_numbers(key, value));
  } else if (key == "estimators") {
    cfg.estimators.clear();
    for (const auto& e : split_list(value)) cfg.estimators.push_back(parse_estimator(e));
  } else if (key == "seed") {
    cfg.seed = std::stoull(value);
  } else if (key == "trend") {
    trend_basis = value;
  } else if (key == "beta") {
    beta = parse_numbers(key, value);
  } else if (key == "sigma1_sq") {
    cfg.sigma1_sq = parse_number(key, value);
  } else if (key == "theta2") {
    cfg.theta2 = parse_number(key, value);
  } else {
    throw InvalidParameter("unknown config key '" + key + "'");
  }
}

std::string json_scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& item : v) {
      if (!out.empty()) out += ',';
      out += item.is_string() ? item.get<std::string>() : item.dump();
    }
    return out;
  }
  if (v.is_number_unsigned() || v.is_number_integer()) return v.dump();
  if (v.is_number()) return format_double(v.get<double>());
  throw InvalidParameter("unsupported config value " + v.dump());
}

ReplicateRecord run_estimator(const ExperimentConfig& cfg, EstimatorKind kind, const Design& design,
                              const std::vector<double>& y, const std::vector<double>& z,
                              const Eigen::MatrixXd& F, double true_product) {
  ReplicateRecord rec;
  try {
    EstimateResult r;
    switch (kind) {
      case EstimatorKind::CvJoint:
        r = estimate_cv_joint(design, y, cfg.box);
        break;
      case EstimatorKind::CvFixedSigma:
        r = estimate_cv_fixed_sigma(design, y, cfg.sigma1_sq, cfg.box.theta_lo, cfg.box.theta_hi);
        break;
      case EstimatorKind::CvFixedTheta:
        r = estimate_cv_fixed_theta(design, y, cfg.theta2, cfg.box.sigma2_lo, cfg.box.sigma2_hi);
        break;
      case EstimatorKind::MlJoint:
        r = estimate_ml_joint(design, y, cfg.box);
        break;
      case EstimatorKind::CvRegression:
        r = estimate_cv_reg(design, z, F, cfg.box);
        break;
    }
    rec.theta_hat = r.theta_hat;
    rec.sigma2_hat = r.sigma2_hat;
    rec.product = r.product;
    rec.objective = r.objective_value;
    rec.std_stat = standardized_statistic(r.product, true_product, design.size(), 1.0);
    rec.flags = r.flags.str();
  } catch (const Error& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.theta_hat = rec.sigma2_hat = rec.product = rec.std_stat = rec.objective = nan;
    rec.flags = "failed:" + e.code();
  }
  return rec;
}

std::vector<double> included_stats(std::span<const ReplicateRecord> records) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) {
    if (!r.failed()) v.push_back(r.std_stat);
  }
  return v;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["design"] = cfg.design.str();
  j["theta0"] = cfg.theta0;
  j["sigma0_sq"] = cfg.sigma0_sq;
  j["replicates"] = cfg.replicates;
  j["box"] = {cfg.box.theta_lo, cfg.box.theta_hi, cfg.box.sigma2_lo, cfg.box.sigma2_hi};
  std::vector<std::string> est;
  for (auto e : cfg.estimators) est.push_back(to_string(e));
  j["estimators"] = est;
  j["seed"] = cfg.seed;
  j["sigma1_sq"] = cfg.sigma1_sq;
  j["theta2"] = cfg.theta2;
  if (cfg.trend && cfg.trend->polynomial_degree) {
    j["trend"] = "polynomial:" + std::to_string(*cfg.trend->polynomial_degree);
    j["beta"] = cfg.trend->beta;
  }
  return j;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::CvJoint:
      return "cv-joint";
    case EstimatorKind::CvFixedSigma:
      return "cv-fixed-sigma";
    case EstimatorKind::CvFixedTheta:
      return "cv-fixed-theta";
    case EstimatorKind::MlJoint:
      return "ml-joint";
    case EstimatorKind::CvRegression:
      return "cv-regression";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& text) {
  for (auto k : {EstimatorKind::CvJoint, EstimatorKind::CvFixedSigma, EstimatorKind::CvFixedTheta,
                 EstimatorKind::MlJoint, EstimatorKind::CvRegression}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidParameter("unknown estimator '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw InvalidParameter("replicates must be at least 1");
  if (!(theta0 > 0.0) || !(sigma0_sq > 0.0)) {
    throw InvalidParameter("theta0 and sigma0_sq must be positive");
  }
  if (!(sigma1_sq > 0.0) || !(theta2 > 0.0)) {
    throw InvalidParameter("sigma1_sq and theta2 must be positive");
  }
  ParameterBox::make(box.theta_lo, box.theta_hi, box.sigma2_lo, box.sigma2_hi);
  if (estimators.empty()) throw InvalidParameter("no estimator requested");
  const bool wants_reg =
      std::find(estimators.begin(), estimators.end(), EstimatorKind::CvRegression) != estimators.end();
  if (wants_reg && !trend) throw InvalidParameter("cv-regression needs a trend");
  if (trend) trend->spec();
}

std::vector<std::string> ExperimentConfig::preset_names() {
  return {"fig2-n12-minimal",  "fig2-n12-regular",  "fig2-n12-maximal", "fig2-n50-regular",
          "fig2-n50-maximal",  "fig2-n200-regular", "fig2-n200-maximal"};
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw InvalidParameter("unknown preset '" + name + "'");
  }
  // fig2-n<N>-<kind>
  const auto dash = name.find('-', 5);
  const std::size_t n = std::stoul(name.substr(6, dash - 6));
  const std::string kind = name.substr(dash + 1);
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.design = DesignSpec::parse(kind + ":" + std::to_string(n));
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  ExperimentConfig cfg;
  cfg.name = path.stem().string();
  std::vector<double> beta;
  std::string trend_basis;
  bool has_design = false;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidParameter("malformed config " + path.string() + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      apply_key(cfg, beta, trend_basis, key, json_scalar_text(value));
      has_design = has_design || key == "design";
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw InvalidParameter("config line lacks '=': " + line);
      const std::string key = trim(line.substr(0, eq));
      apply_key(cfg, beta, trend_basis, key, trim(line.substr(eq + 1)));
      has_design = has_design || key == "design";
    }
  }
  if (!has_design) throw InvalidParameter("config needs a design");
  if (!trend_basis.empty()) {
    cfg.trend = TrendConfig::parse_basis(trend_basis);
    cfg.trend->beta = beta;
  }
  cfg.validate();
  return cfg;
}

Summary summarize(std::span<const ReplicateRecord> records, double tau_sq) {
  Summary s;
  s.tau_sq = tau_sq;
  const auto v = included_stats(records);
  s.count = v.size();
  s.excluded = records.size() - v.size();
  if (v.empty()) {
    s.mean = s.variance = s.skewness = s.z_mean = s.variance_ratio =
        std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const double count = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / count;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  s.variance = v.size() > 1 ? m2 / (count - 1.0) : 0.0;
  const double pop_var = m2 / count;
  s.skewness = pop_var > 0.0 ? (m3 / count) / std::pow(pop_var, 1.5) : 0.0;
  s.z_mean = s.variance > 0.0 ? s.mean / std::sqrt(s.variance / count) : 0.0;
  s.variance_ratio = s.variance / tau_sq;
  return s;
}

Histogram make_histogram(std::span<const ReplicateRecord> records) {
  auto v = included_stats(records);
  Histogram h;
  if (v.empty()) return h;
  std::sort(v.begin(), v.end());
  double lo = v.front();
  double hi = v.back();
  const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  std::size_t bins = 1;
  if (hi > lo && iqr > 0.0) {
    const double fd = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
    bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil((hi - lo) / fd)), 1, kMaxBins);
  }
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.bin_width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = lo + static_cast<double>(k) * h.bin_width;
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double x : v) {
    auto k = static_cast<std::size_t>(std::floor((x - lo) / h.bin_width));
    h.counts[std::min(k, bins - 1)]++;
  }
  return h;
}

std::vector<ExperimentReport> run_experiment(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  const Design design = config.design.build();
  const auto params = CovarianceParams::make(config.theta0, config.sigma0_sq);
  const double true_product = config.theta0 * config.sigma0_sq;
  const std::size_t N = config.replicates;
  const std::size_t E = config.estimators.size();

  Eigen::MatrixXd F;
  std::optional<TrendSpec> trend;
  if (config.trend) {
    trend = config.trend->spec();
    F = trend->basis.evaluate(design);
    require_full_column_rank(F);
  }

  // records[e * N + r], filled by whichever worker takes replicate r
  std::vector<ReplicateRecord> records(E * N);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < N; r = next++) {
      const std::uint64_t seed = replicate_seed(config.seed, r);
      const auto y = sample_path(design, params, seed);
      std::vector<double> z;
      if (trend) {
        const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(
            trend->beta.data(), static_cast<Eigen::Index>(trend->beta.size()));
        const Eigen::VectorXd mean = F * beta;
        z = y;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += mean(static_cast<Eigen::Index>(i));
      }
      for (std::size_t e = 0; e < E; ++e) {
        auto rec = run_estimator(config, config.estimators[e], design, y, z, F, true_product);
        rec.replicate = r;
        rec.seed = seed;
        records[e * N + r] = std::move(rec);
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(N)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const double tau_sq = design.size() >= 5 ? tau_squared(design)
                                           : std::numeric_limits<double>::quiet_NaN();
  std::vector<ExperimentReport> reports(E);
  for (std::size_t e = 0; e < E; ++e) {
    auto& rep = reports[e];
    rep.estimator = config.estimators[e];
    rep.n = design.size();
    rep.tau_sq = tau_sq;
    rep.records.assign(records.begin() + static_cast<std::ptrdiff_t>(e * N),
                       records.begin() + static_cast<std::ptrdiff_t>((e + 1) * N));
    rep.summary = summarize(rep.records, tau_sq);
    rep.histogram = make_histogram(rep.records);
    const double sd = std::sqrt(tau_sq);
    for (std::size_t k = 0; k + 1 < rep.histogram.edges.size(); ++k) {
      const double x = 0.5 * (rep.histogram.edges[k] + rep.histogram.edges[k + 1]);
      rep.reference_density.push_back(std::exp(-0.5 * x * x / tau_sq) /
                                      (sd * std::sqrt(2.0 * std::numbers::pi)));
    }
  }
  return reports;
}

void export_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::ostringstream rec;
  rec << "replicate,seed,theta_hat,sigma2_hat,product,std_stat,objective,flags\n";
  for (const auto& r : report.records) {
    rec << r.replicate << ',' << r.seed << ',' << format_double(r.theta_hat) << ','
        << format_double(r.sigma2_hat) << ',' << format_double(r.product) << ','
        << format_double(r.std_stat) << ',' << format_double(r.objective) << ',' << r.flags << '\n';
  }
  write_file(dir / "records.csv", rec.str());

  std::ostringstream hist;
  hist << "bin_lo,bin_hi,count,reference_density\n";
  for (std::size_t k = 0; k < report.histogram.counts.size(); ++k) {
    hist << format_double(report.histogram.edges[k]) << ','
         << format_double(report.histogram.edges[k + 1]) << ',' << report.histogram.counts[k] << ','
         << format_double(report.reference_density[k]) << '\n';
  }
  write_file(dir / "histogram.csv", hist.str());

  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["estimator"] = to_string(report.estimator);
  j["n"] = report.n;
  j["replicates"] = report.records.size();
  j["tau_sq"] = num(report.tau_sq);
  j["count"] = report.summary.count;
  j["excluded"] = report.summary.excluded;
  j["mean"] = num(report.summary.mean);
  j["variance"] = num(report.summary.variance);
  j["skewness"] = num(report.summary.skewness);
  j["z_mean"] = num(report.summary.z_mean);
  j["variance_ratio"] = num(report.summary.variance_ratio);
  j["bin_width"] = report.histogram.bin_width;
  j["bins"] = report.histogram.counts.size();
  write_file(dir / "summary.json", j.dump(2) + "\n");
}

void export_run(const ExperimentConfig& config, const std::vector<ExperimentReport>& reports,
                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "config.json", config_json(config).dump(2) + "\n");
  if (reports.size() == 1) {
    export_report(reports.front(), dir);
    return;
  }
  for (const auto& rep : reports) export_report(rep, dir / to_string(rep.estimator));
}

std::vector<ReplicateRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<ReplicateRecord> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw InvalidParameter("records row needs 8 columns: " + line);
    ReplicateRecord r;
    r.replicate = std::stoull(cells[0]);
    r.seed = std::stoull(cells[1]);
    r.theta_hat = std::strtod(cells[2].c_str(), nullptr);
    r.sigma2_hat = std::strtod(cells[3].c_str(), nullptr);
    r.product = std::strtod(cells[4].c_str(), nullptr);
    r.std_stat = std::strtod(cells[5].c_str(), nullptr);
    r.objective = std::strtod(cells[6].c_str(), nullptr);
    r.flags = trim(cells[7]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace oucv
