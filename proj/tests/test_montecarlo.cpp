#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "oucv/design.hpp"
#include "oucv/error.hpp"
#include "oucv/montecarlo.hpp"

using namespace oucv;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("oucv_mc_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_records(const std::vector<ReplicateRecord>& a, const std::vector<ReplicateRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.replicate != y.replicate || x.seed != y.seed || x.flags != y.flags) return false;
    if (!same_bits(x.theta_hat, y.theta_hat) || !same_bits(x.sigma2_hat, y.sigma2_hat) ||
        !same_bits(x.product, y.product) || !same_bits(x.std_stat, y.std_stat) ||
        !same_bits(x.objective, y.objective)) {
      return false;
    }
  }
  return true;
}

ExperimentConfig small_config(std::size_t replicates) {
  ExperimentConfig cfg;
  cfg.name = "small";
  cfg.design = DesignSpec::parse("regular:40");
  cfg.replicates = replicates;
  return cfg;
}

}  // namespace

TEST_CASE("single replicate is reproducible") {
  const auto cfg = small_config(1);
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == 1);
  CHECK(a[0].records.size() == 1);
  CHECK(same_records(a[0].records, b[0].records));
}

TEST_CASE("parallel and serial runs are bitwise equal") {
  auto cfg = small_config(97);
  cfg.estimators = {EstimatorKind::CvJoint, EstimatorKind::MlJoint, EstimatorKind::CvFixedSigma,
                    EstimatorKind::CvFixedTheta};
  const auto serial = run_experiment(cfg, 1);
  const auto parallel = run_experiment(cfg, 4);
  REQUIRE(serial.size() == 4);
  for (std::size_t e = 0; e < serial.size(); ++e) {
    CHECK(same_records(serial[e].records, parallel[e].records));
    CHECK(same_bits(serial[e].summary.variance, parallel[e].summary.variance));
    CHECK(serial[e].histogram.counts == parallel[e].histogram.counts);
  }
}

TEST_CASE("report structure") {
  const auto cfg = small_config(300);
  const auto rep = run_experiment(cfg).front();
  const auto design = cfg.design.build();
  CHECK(rep.records.size() == 300);
  CHECK(rep.tau_sq == tau_squared(design));
  CHECK(rep.summary.variance >= 0.0);
  std::size_t total = 0;
  for (auto c : rep.histogram.counts) total += c;
  CHECK(total == rep.summary.count);
  CHECK(rep.summary.count + rep.summary.excluded == 300);
  CHECK(rep.reference_density.size() == rep.histogram.counts.size());
  CHECK(rep.histogram.bin_width > 0.0);
  for (std::size_t r = 0; r < rep.records.size(); ++r) {
    const auto& rec = rep.records[r];
    CHECK(rec.replicate == r);
    CHECK(rec.seed == replicate_seed(cfg.seed, r));
    CHECK(rec.product == rec.theta_hat * rec.sigma2_hat);
    CHECK(rec.std_stat == standardized_statistic(rec.product, 3.0, 40, 1.0));
  }
}

TEST_CASE("summary moments") {
  std::vector<ReplicateRecord> same(10);
  for (auto& r : same) {
    r.std_stat = 1.25;
    r.flags = "none";
  }
  const auto s = summarize(same, 3.0);
  CHECK(s.variance == 0.0);
  CHECK(s.mean == 1.25);

  // standard normal quantiles at (k - 1/2) / N
  const boost::math::normal_distribution<double> normal;
  std::vector<ReplicateRecord> synth(2000);
  for (std::size_t k = 0; k < synth.size(); ++k) {
    synth[k].std_stat = boost::math::quantile(normal, (static_cast<double>(k) + 0.5) / 2000.0);
    synth[k].flags = "none";
  }
  const auto t = summarize(synth, 1.0);
  CHECK(t.variance >= 0.94);
  CHECK(t.variance <= 1.06);
  CHECK(t.variance_ratio == t.variance);
  CHECK(std::abs(t.z_mean) < 4.0);

  synth[3].flags = "failed:numerical_failure";
  synth[3].std_stat = std::nan("");
  const auto u = summarize(synth, 1.0);
  CHECK(u.excluded == 1);
  CHECK(u.count == 1999);
  CHECK(std::isfinite(u.variance));
  std::size_t total = 0;
  for (auto c : make_histogram(synth).counts) total += c;
  CHECK(total == 1999);
}

TEST_CASE("export round trip") {
  auto cfg = small_config(50);
  const auto reports = run_experiment(cfg);
  const auto dir = scratch("export");
  export_run(cfg, reports, dir);
  CHECK(std::filesystem::exists(dir / "config.json"));
  CHECK(std::filesystem::exists(dir / "histogram.csv"));

  const auto back = read_records_csv(dir / "records.csv");
  CHECK(same_records(back, reports[0].records));
  const auto again = summarize(back, reports[0].tau_sq);
  CHECK(same_bits(again.mean, reports[0].summary.mean));
  CHECK(same_bits(again.variance, reports[0].summary.variance));
  CHECK(same_bits(again.skewness, reports[0].summary.skewness));

  std::ifstream csv(dir / "records.csv");
  std::string line;
  while (std::getline(csv, line)) CHECK(std::count(line.begin(), line.end(), ',') == 7);

  std::ifstream js(dir / "summary.json");
  const auto summary = nlohmann::json::parse(js);
  CHECK(summary.at("tau_sq").get<double>() == tau_squared(regular_design(40)));

  cfg.estimators = {EstimatorKind::CvJoint, EstimatorKind::MlJoint};
  const auto multi = scratch("multi");
  export_run(cfg, run_experiment(cfg), multi);
  CHECK(std::filesystem::exists(multi / "cv-joint" / "records.csv"));
  CHECK(std::filesystem::exists(multi / "ml-joint" / "summary.json"));

  CHECK_THROWS_AS(read_records_csv(dir / "missing.csv"), IoError);
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(multi);
}

TEST_CASE("config files") {
  const auto dir = scratch("config");
  std::filesystem::create_directories(dir);
  {
    std::ofstream kv(dir / "a.cfg");
    kv << "# comment\nname = run-a\ndesign = maximal:30\nreplicates = 5\nbox = 0.2, 8, 0.5, 20\n"
          "estimators = cv-joint, cv-regression\ntrend = polynomial:1\nbeta = 1, 2\nseed = 9\n";
  }
  const auto a = ExperimentConfig::load(dir / "a.cfg");
  CHECK(a.name == "run-a");
  CHECK(a.design.str() == "maximal:30");
  CHECK(a.replicates == 5);
  CHECK(a.box.theta_lo == 0.2);
  CHECK(a.box.sigma2_hi == 20.0);
  CHECK(a.estimators.size() == 2);
  CHECK(a.trend->beta == std::vector<double>{1.0, 2.0});
  CHECK(a.seed == 9);
  const auto reports = run_experiment(a, 2);
  CHECK(reports.size() == 2);
  CHECK(reports[1].estimator == EstimatorKind::CvRegression);

  {
    std::ofstream js(dir / "b.json");
    js << R"({"design": "minimal:12:0.5", "replicates": 3, "estimators": ["ml-joint"], "theta0": 2})";
  }
  const auto b = ExperimentConfig::load(dir / "b.json");
  CHECK(b.theta0 == 2.0);
  CHECK(b.estimators.front() == EstimatorKind::MlJoint);
  CHECK(b.name == "b");

  {
    std::ofstream bad(dir / "c.cfg");
    bad << "design = regular:20\ncolour = blue\n";
  }
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "c.cfg"), InvalidParameter);
  {
    std::ofstream bad(dir / "d.cfg");
    bad << "design = regular:20\nestimators = cv-regression\n";
  }
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "d.cfg"), InvalidParameter);
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "none.cfg"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("presets") {
  const auto names = ExperimentConfig::preset_names();
  CHECK(names.size() == 7);
  for (const auto& name : names) {
    const auto cfg = ExperimentConfig::preset(name);
    CHECK(cfg.replicates == 2000);
    CHECK(cfg.theta0 == 3.0);
    CHECK(cfg.sigma0_sq == 1.0);
    CHECK(cfg.box.theta_lo == 0.1);
    CHECK(cfg.box.sigma2_hi == 30.0);
    CHECK_NOTHROW(cfg.design.build());
  }
  CHECK(ExperimentConfig::preset("fig2-n12-minimal").design.str() == "minimal:12");
  CHECK(ExperimentConfig::preset("fig2-n200-maximal").design.build().size() == 200);
  CHECK_THROWS_AS(ExperimentConfig::preset("fig3"), InvalidParameter);
}

TEST_CASE("preset means stay centred") {
  for (const auto& name : ExperimentConfig::preset_names()) {
    const auto rep = run_experiment(ExperimentConfig::preset(name), 4).front();
    INFO(name << " mean " << rep.summary.mean);
    CHECK(std::abs(rep.summary.mean) <= 3.0 / std::sqrt(2000.0) + 0.1);
  }
}

TEST_CASE("maximal design beats regular in variance at matched seeds") {
  auto reg = ExperimentConfig::preset("fig2-n200-regular");
  auto max = ExperimentConfig::preset("fig2-n200-maximal");
  const auto a = run_experiment(reg, 4).front();
  const auto b = run_experiment(max, 4).front();
  CHECK(b.summary.variance > a.summary.variance);
  CHECK(a.records.front().seed == b.records.front().seed);
}
