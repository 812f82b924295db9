#include "cli.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oucv/design.hpp"
#include "oucv/error.hpp"
#include "oucv/estimation.hpp"
#include "oucv/io.hpp"
#include "oucv/montecarlo.hpp"
#include "oucv/regression.hpp"
#include "oucv/scoring.hpp"
#include "oucv/simulate.hpp"

namespace oucv::cli {

namespace {

// Flat JSON object whose numbers keep 17 significant digits.
class JsonLine {
 public:
  JsonLine& num(const std::string& key, double v) {
    return raw(key, std::isfinite(v) ? format_double(v) : "null");
  }
  JsonLine& integer(const std::string& key, long long v) { return raw(key, std::to_string(v)); }
  JsonLine& str(const std::string& key, const std::string& v) {
    return raw(key, nlohmann::json(v).dump());
  }
  JsonLine& list(const std::string& key, const Eigen::VectorXd& v) {
    std::string text = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i > 0) text += ", ";
      text += format_double(v(i));
    }
    return raw(key, text + "]");
  }
  JsonLine& raw(const std::string& key, const std::string& text) {
    fields_.emplace_back(key, text);
    return *this;
  }
  std::string dump() const {
    std::string out = "{";
    for (std::size_t k = 0; k < fields_.size(); ++k) {
      if (k > 0) out += ", ";
      out += nlohmann::json(fields_[k].first).dump() + ": " + fields_[k].second;
    }
    return out + "}";
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain:
      return 1;
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Numerical:
      return 3;
  }
  return 3;
}

JsonLine error_line(const std::string& code, const std::string& message) {
  JsonLine line;
  line.str("error", code).str("message", message);
  return line;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << error_line(code, message).dump() << '\n';
}

ParameterBox parse_box(const std::vector<double>& v) {
  if (v.size() != 4) throw InvalidParameter("--box needs four values a,A,b,B");
  return ParameterBox::make(v[0], v[1], v[2], v[3]);
}

void warn_if_unresolved(const DesignSpec& spec, std::ostream& err) {
  if (spec.kind == DesignSpec::Kind::Minimal && spec.n > kMinimalDesignWarnAbove) {
    JsonLine w;
    w.str("warning", "minimal design with n > " + std::to_string(kMinimalDesignWarnAbove) +
                         " has points closer than binary64 resolution near 1");
    err << w.dump() << '\n';
  }
}

Design load_series_design(const SeriesData& data) { return Design::from_points(data.points); }

struct DesignArgs {
  std::string kind = "regular";
  std::size_t n = 0;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::string points;
  std::string out;
};

int cmd_design(const DesignArgs& a, std::ostream& out, std::ostream& err) {
  DesignSpec spec;
  if (a.kind == "file") {
    if (a.points.empty()) throw InvalidParameter("--kind file needs --points");
    spec.kind = DesignSpec::Kind::File;
    spec.path = a.points;
  } else {
    spec = DesignSpec::parse(a.kind + ":" + std::to_string(a.n));
    spec.gamma = a.gamma;
    spec.alpha = a.alpha;
  }
  warn_if_unresolved(spec, err);
  const Design design = spec.build();
  JsonLine info;
  info.integer("n", static_cast<long long>(design.size()));
  if (design.size() >= 5) {
    info.num("tau_sq", tau_squared(design));
  } else {
    info.raw("tau_sq", "null");
  }
  if (a.out.empty()) {
    write_design_csv(out, design);
    err << info.dump() << '\n';
  } else {
    std::ofstream file(a.out);
    if (!file) throw IoError("cannot write " + a.out);
    write_design_csv(file, design);
    if (!file) throw IoError("write failed for " + a.out);
    out << info.dump() << '\n';
  }
  return 0;
}

struct SimulateArgs {
  std::string design;
  double theta = 0.0;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  std::string trend;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto spec = DesignSpec::parse(a.design);
  warn_if_unresolved(spec, err);
  const Design design = spec.build();
  const auto params = CovarianceParams::make(a.theta, a.sigma2);
  if (a.trend.empty()) {
    write_series_csv(out, design, sample_path(design, params, a.seed), "y");
  } else {
    const auto trend = TrendConfig::load(a.trend).spec();
    write_series_csv(out, design, sample_with_trend(design, params, trend, a.seed), "z");
  }
  return 0;
}

struct ScoreArgs {
  std::string data;
  double theta = 0.0;
  double sigma2 = 0.0;
  std::string objective = "cv";
  bool oracle = false;
  std::string trend;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  const auto data = read_series_csv(a.data);
  const Design design = load_series_design(data);
  const auto params = CovarianceParams::make(a.theta, a.sigma2);
  const std::span<const double> y(data.values);
  JsonLine line;
  line.str("objective", a.objective)
      .str("path", a.oracle ? "dense" : "fast")
      .integer("n", static_cast<long long>(design.size()))
      .num("theta", params.theta)
      .num("sigma2", params.sigma2);
  if (!a.trend.empty()) {
    if (a.objective != "cv") throw InvalidParameter("--trend is only available with --objective cv");
    const Eigen::MatrixXd F = TrendConfig::load(a.trend).matrix(design);
    const auto d = reg_score_decomposition(design, y, params.theta, F);
    const double value = a.oracle ? dense_oracle_reg_score(design, y, params.theta, params.sigma2, F)
                                   : d.at(params.sigma2);
    line.num("score", value).num("L", d.L).num("Q", d.Q);
  } else if (a.objective == "cv") {
    const auto d = score_decomposition(design, y, params.theta);
    const double value = a.oracle ? dense_oracle_score(design, y, params.theta, params.sigma2)
                                   : log_score(design, y, params.theta, params.sigma2);
    line.num("score", value)
        .num("L", d.L)
        .num("Q", d.Q)
        .num("gradient_theta", score_gradient_theta(design, y, params.theta, params.sigma2));
  } else {
    const double value = a.oracle ? dense_oracle_ml(design, y, params.theta, params.sigma2)
                                   : ml_neg2loglik(design, y, params.theta, params.sigma2);
    line.num("score", value)
        .num("gradient_theta", ml_gradient_theta(design, y, params.theta, params.sigma2));
  }
  out << line.dump() << '\n';
  return 0;
}

struct EstimateArgs {
  std::string data;
  std::vector<double> box{0.1, 10.0, 0.3, 30.0};
  std::string mode = "joint";
  std::string objective = "cv";
  double sigma1 = 1.0;
  double theta2 = 3.0;
  std::string trend;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const auto data = read_series_csv(a.data);
  const Design design = load_series_design(data);
  const std::span<const double> y(data.values);
  const ParameterBox box = parse_box(a.box);
  if (a.objective == "ml" && a.mode != "joint") {
    throw InvalidParameter("--objective ml supports only --mode joint");
  }
  if (!a.trend.empty() && (a.objective != "cv" || a.mode != "joint")) {
    throw InvalidParameter("--trend requires --objective cv and --mode joint");
  }
  EstimateResult r;
  std::optional<Eigen::VectorXd> beta;
  if (!a.trend.empty()) {
    const Eigen::MatrixXd F = TrendConfig::load(a.trend).matrix(design);
    r = estimate_cv_reg(design, y, F, box);
    beta = gls_beta(design, y, r.theta_hat, F);
  } else if (a.objective == "ml") {
    r = estimate_ml_joint(design, y, box);
  } else if (a.mode == "joint") {
    r = estimate_cv_joint(design, y, box);
  } else if (a.mode == "fixed-sigma") {
    r = estimate_cv_fixed_sigma(design, y, a.sigma1, box.theta_lo, box.theta_hi);
  } else {
    r = estimate_cv_fixed_theta(design, y, a.theta2, box.sigma2_lo, box.sigma2_hi);
  }
  JsonLine line;
  line.str("objective", a.objective)
      .str("mode", a.mode)
      .integer("n", static_cast<long long>(design.size()))
      .num("theta_hat", r.theta_hat)
      .num("sigma2_hat", r.sigma2_hat)
      .num("product", r.product)
      .num("objective_value", r.objective_value)
      .num("gradient_at_opt", r.gradient_at_opt)
      .str("boundary_flags", r.flags.str())
      .integer("iterations", r.iterations);
  if (beta) line.list("beta_hat", *beta);
  out << line.dump() << '\n';
  return 0;
}

struct ExperimentArgs {
  std::string config;
  std::string preset;
  std::string out;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg =
      a.preset.empty() ? ExperimentConfig::load(a.config) : ExperimentConfig::preset(a.preset);
  if (a.seed) cfg.seed = *a.seed;
  if (a.replicates) cfg.replicates = *a.replicates;
  cfg.validate();
  warn_if_unresolved(cfg.design, err);
  const unsigned threads = a.threads > 0 ? a.threads : std::max(1u, std::thread::hardware_concurrency());
  const auto reports = run_experiment(cfg, threads);
  const std::filesystem::path dir = a.out.empty() ? std::filesystem::path("runs") / cfg.name
                                                       : std::filesystem::path(a.out);
  export_run(cfg, reports, dir);
  for (const auto& rep : reports) {
    JsonLine line;
    line.str("estimator", to_string(rep.estimator))
        .integer("n", static_cast<long long>(rep.n))
        .integer("replicates", static_cast<long long>(rep.records.size()))
        .integer("excluded", static_cast<long long>(rep.summary.excluded))
        .num("tau_sq", rep.tau_sq)
        .num("mean", rep.summary.mean)
        .num("variance", rep.summary.variance)
        .num("skewness", rep.summary.skewness)
        .str("out", dir.string());
    out << line.dump() << '\n';
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-validation and maximum-likelihood estimation for the Ornstein-Uhlenbeck process"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "oucv 1.0");

  DesignArgs design_args;
  auto* design = app.add_subcommand("design", "Build a design and print it as CSV with its tau^2");
  design->add_option("--kind", design_args.kind, "regular, maximal, minimal or file")
      ->check(CLI::IsMember({"regular", "maximal", "minimal", "file"}))
      ->capture_default_str();
  design->add_option("--n", design_args.n, "Number of points");
  design->add_option("--gamma", design_args.gamma, "Short-gap fraction of the maximal design (default 1/n)");
  design->add_option("--alpha", design_args.alpha, "Exponent of the minimal design (default 0.5)");
  design->add_option("--points", design_args.points, "File of sorted points for --kind file");
  design->add_option("--out", design_args.out,
                     "Write the CSV here and print a JSON summary on stdout instead");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Draw one path at the design points as CSV");
  simulate->add_option("--design", sim_args.design, "regular:N, maximal:N[:G], minimal:N[:A] or file:PATH")
      ->required();
  simulate->add_option("--theta", sim_args.theta, "Inverse length scale")->required();
  simulate->add_option("--sigma2", sim_args.sigma2, "Variance")->required();
  simulate->add_option("--seed", sim_args.seed, "Random seed")->capture_default_str();
  simulate->add_option("--trend", sim_args.trend, "Trend config (JSON with basis and beta)");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Evaluate the CV score or the ML objective");
  score->add_option("--data", score_args.data, "CSV with an s column; the last column holds values")
      ->required();
  score->add_option("--theta", score_args.theta, "Inverse length scale")->required();
  score->add_option("--sigma2", score_args.sigma2, "Variance")->required();
  score->add_option("--objective", score_args.objective, "cv or ml")
      ->check(CLI::IsMember({"cv", "ml"}))
      ->capture_default_str();
  score->add_flag("--oracle", score_args.oracle, "Use the dense O(n^3) path");
  score->add_option("--trend", score_args.trend, "Trend config for the unknown-mean score");

  EstimateArgs est_args;
  auto* estimate = app.add_subcommand("estimate", "Estimate the covariance parameters; JSON output");
  estimate->add_option("--data", est_args.data, "CSV with an s column; the last column holds values")
      ->required();
  estimate->add_option("--box", est_args.box, "a,A,b,B")->delimiter(',')->expected(4)->capture_default_str();
  estimate->add_option("--mode", est_args.mode, "joint, fixed-sigma or fixed-theta")
      ->check(CLI::IsMember({"joint", "fixed-sigma", "fixed-theta"}))
      ->capture_default_str();
  estimate->add_option("--objective", est_args.objective, "cv or ml")
      ->check(CLI::IsMember({"cv", "ml"}))
      ->capture_default_str();
  estimate->add_option("--sigma1", est_args.sigma1, "Fixed variance for --mode fixed-sigma")
      ->capture_default_str();
  estimate->add_option("--theta2", est_args.theta2, "Fixed theta for --mode fixed-theta")
      ->capture_default_str();
  estimate->add_option("--trend", est_args.trend, "Trend config; estimates under the unknown-mean model");

  ExperimentArgs exp_args;
  auto* experiment = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
  auto* config_opt = experiment->add_option("--config", exp_args.config, "Config file (JSON or key = value)");
  auto* preset_opt = experiment->add_option("--preset", exp_args.preset, "Named preset")
                         ->check(CLI::IsMember(ExperimentConfig::preset_names()));
  config_opt->excludes(preset_opt);
  experiment->add_option("--out", exp_args.out, "Run directory (default runs/<name>)");
  experiment->add_option("--threads", exp_args.threads, "Worker threads (default: all cores)");
  experiment->add_option("--seed", exp_args.seed, "Override the base seed");
  experiment->add_option("--replicates", exp_args.replicates, "Override the replicate count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    report_error(err, "usage", e.what());
    return 1;
  }

  try {
    if (*design) return cmd_design(design_args, out, err);
    if (*simulate) return cmd_simulate(sim_args, out, err);
    if (*score) return cmd_score(score_args, out);
    if (*estimate) return cmd_estimate(est_args, out);
    if (exp_args.config.empty() && exp_args.preset.empty()) {
      throw InvalidParameter("experiment needs --config or --preset");
    }
    return cmd_experiment(exp_args, out, err);
  } catch (const InvalidDesign& e) {
    auto line = error_line(e.code(), e.what());
    if (e.index()) line.integer("index", static_cast<long long>(*e.index()));
    err << line.dump() << '\n';
    return exit_code(e.kind());
  } catch (const NumericalFailure& e) {
    auto line = error_line(e.code(), e.what());
    if (e.theta()) line.num("theta", *e.theta());
    err << line.dump() << '\n';
    return exit_code(e.kind());
  } catch (const Error& e) {
    report_error(err, e.code(), e.what());
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    report_error(err, "invalid_parameter", e.what());
    return 1;
  } catch (const std::logic_error& e) {
    report_error(err, "invalid_parameter", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error(err, "numerical_failure", e.what());
    return 3;
  }
}

}  // namespace oucv::cli
