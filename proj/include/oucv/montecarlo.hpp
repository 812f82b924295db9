#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oucv/estimation.hpp"
#include "oucv/io.hpp"

namespace oucv {

enum class EstimatorKind { CvJoint, CvFixedSigma, CvFixedTheta, MlJoint, CvRegression };

std::string to_string(EstimatorKind kind);
/// Accepts cv-joint, cv-fixed-sigma, cv-fixed-theta, ml-joint, cv-regression.
EstimatorKind parse_estimator(const std::string& text);

struct ExperimentConfig {
  std::string name;
  DesignSpec design;
  double theta0 = 3.0;
  double sigma0_sq = 1.0;
  std::size_t replicates = 2000;
  ParameterBox box{0.1, 10.0, 0.3, 30.0};
  std::vector<EstimatorKind> estimators{EstimatorKind::CvJoint};
  std::uint64_t seed = 2017;
  /// Mean model of the generated data; required by cv-regression, whose
  /// replicates observe z = F beta + y while the other estimators see y.
  std::optional<TrendConfig> trend;
  double sigma1_sq = 1.0;  // cv-fixed-sigma
  double theta2 = 3.0;     // cv-fixed-theta

  void validate() const;

  /// The seven histogram panels: fig2-n12-{minimal,regular,maximal},
  /// fig2-n50-{regular,maximal}, fig2-n200-{regular,maximal}.
  static ExperimentConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();

  /// JSON object, or flat `key = value` lines with '#' comments. Keys: name,
  /// design, theta0, sigma0_sq, replicates, box (a,A,b,B), estimators
  /// (comma list), seed, trend (polynomial:K), beta (comma list),
  /// sigma1_sq, theta2.
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// One replicate of one estimator. std_stat is
/// sqrt(n) (product - theta0 sigma0^2) / (theta0 sigma0^2), whose limiting
/// variance is tau_n^2.
struct ReplicateRecord {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double theta_hat = 0.0;
  double sigma2_hat = 0.0;
  double product = 0.0;
  double std_stat = 0.0;
  double objective = 0.0;
  /// Active bounds ("none", "theta_lo|sigma2_hi", ...) or "failed:<code>".
  std::string flags;

  bool failed() const { return flags.rfind("failed", 0) == 0; }
};

struct Summary {
  std::size_t count = 0;     // records entering the moments
  std::size_t excluded = 0;  // failed replicates
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double z_mean = 0.0;          // mean / sqrt(variance / count)
  double variance_ratio = 0.0;  // variance / tau_sq
  double tau_sq = 0.0;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  double bin_width = 0.0;
};

struct ExperimentReport {
  EstimatorKind estimator = EstimatorKind::CvJoint;
  std::size_t n = 0;
  double tau_sq = 0.0;
  std::vector<ReplicateRecord> records;
  Summary summary;
  Histogram histogram;
  /// N(0, tau_sq) density at the histogram bin centres.
  std::vector<double> reference_density;
};

/// Runs every configured estimator on `replicates` simulated data sets.
/// Replicate r draws from the stream replicate_seed(seed, r), so the result
/// does not depend on `threads` or scheduling. Estimator failures are
/// recorded per replicate and excluded from the moments.
std::vector<ExperimentReport> run_experiment(const ExperimentConfig& config, unsigned threads = 1);

/// Moments of std_stat over the non-failed records.
Summary summarize(std::span<const ReplicateRecord> records, double tau_sq);

/// Freedman-Diaconis binning of std_stat over the non-failed records.
Histogram make_histogram(std::span<const ReplicateRecord> records);

/// Writes records.csv, summary.json and histogram.csv into `dir`.
void export_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Writes config.json and one report; with several estimators each report
/// goes to its own subdirectory named after the estimator.
void export_run(const ExperimentConfig& config, const std::vector<ExperimentReport>& reports,
                const std::filesystem::path& dir);

std::vector<ReplicateRecord> read_records_csv(const std::filesystem::path& path);

}  // namespace oucv
