#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "oucv/estimation.hpp"
#include "oucv/io.hpp"
#include "oucv/scoring.hpp"

using namespace oucv;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "oucv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch() {
  static const auto dir = [] {
    auto d = std::filesystem::temp_directory_path() / "oucv_cli_test";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

nlohmann::json last_json_line(const std::string& s) {
  std::istringstream in(s);
  std::string line;
  std::string last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return nlohmann::json::parse(last);
}

}  // namespace

TEST_CASE("design subcommand") {
  const auto r = invoke({"design", "--kind", "regular", "--n", "12"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("index,s,delta\n", 0) == 0);
  CHECK(count_lines(r.out) == 13);
  const auto info = last_json_line(r.err);
  CHECK(info.at("tau_sq").get<double>() == tau_squared(regular_design(12)));

  const auto path = (scratch() / "max.csv").string();
  const auto m = invoke({"design", "--kind", "maximal", "--n", "20", "--gamma", "0.1", "--out", path});
  CHECK(m.code == 0);
  CHECK(last_json_line(m.out).at("tau_sq").get<double>() == tau_squared(maximal_design(20, 0.1)));
  const auto back = invoke({"design", "--kind", "file", "--points", path});
  CHECK(back.code == 0);
  CHECK(last_json_line(back.err).at("n").get<int>() == 20);

  const auto over = invoke({"design", "--kind", "minimal", "--n", "200", "--alpha", "0.5"});
  CHECK(over.code == 1);
  CHECK(last_json_line(over.err).at("error") == "overflow");

  const auto warn = invoke({"design", "--kind", "minimal", "--n", "30"});
  CHECK(warn.code == 0);
  CHECK(warn.err.find("warning") != std::string::npos);

  const auto unsorted = write("bad.txt", "s\n0\n0.6\n0.4\n1\n");
  const auto bad = invoke({"design", "--kind", "file", "--points", unsorted});
  CHECK(bad.code == 1);
  const auto err = last_json_line(bad.err);
  CHECK(err.at("error") == "invalid_design");
  CHECK(err.at("index") == 3);

  CHECK(invoke({"design", "--kind", "file", "--points", (scratch() / "nope").string()}).code == 2);
  CHECK(invoke({"design", "--kind", "hexagonal", "--n", "5"}).code == 1);
}

TEST_CASE("help and parse errors") {
  const auto h = invoke({"--help"});
  CHECK(h.code == 0);
  for (const char* sub : {"design", "simulate", "score", "estimate", "experiment"}) {
    CHECK(h.out.find(sub) != std::string::npos);
  }
  const auto dh = invoke({"design", "--help"});
  CHECK(dh.code == 0);
  for (const char* flag : {"--kind", "--n", "--gamma", "--alpha", "--points"}) {
    CHECK(dh.out.find(flag) != std::string::npos);
  }
  const auto eh = invoke({"estimate", "--help"});
  for (const char* flag : {"--data", "--box", "--mode", "--objective", "--sigma1", "--theta2", "--trend"}) {
    CHECK(eh.out.find(flag) != std::string::npos);
  }
  const auto xh = invoke({"experiment", "--help"});
  for (const char* flag : {"--config", "--preset", "--out", "--threads", "--seed"}) {
    CHECK(xh.out.find(flag) != std::string::npos);
  }

  CHECK(invoke({}).code == 1);
  CHECK(invoke({"design", "--bogus"}).code == 1);
  const auto both = invoke({"experiment", "--preset", "fig2-n12-regular", "--config", "x.cfg"});
  CHECK(both.code == 1);
  CHECK(last_json_line(both.err).at("error") == "usage");
  CHECK(invoke({"experiment"}).code == 1);
}

TEST_CASE("simulate, score and estimate") {
  const auto a = invoke({"simulate", "--design", "regular:60", "--theta", "3", "--sigma2", "1", "--seed", "42"});
  const auto b = invoke({"simulate", "--design", "regular:60", "--theta", "3", "--sigma2", "1", "--seed", "42"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("index,s,y\n", 0) == 0);
  const auto data = write("y.csv", a.out);

  const auto series = read_series_csv(data);
  const auto design = Design::from_points(series.points);
  const auto fast = invoke({"score", "--data", data, "--theta", "2.5", "--sigma2", "0.8"});
  CHECK(fast.code == 0);
  const auto js = last_json_line(fast.out);
  CHECK(js.at("score").get<double>() == log_score(design, series.values, 2.5, 0.8));
  const auto dec = score_decomposition(design, series.values, 2.5);
  CHECK(js.at("L").get<double>() == dec.L);
  CHECK(js.at("Q").get<double>() == dec.Q);
  const auto dense = last_json_line(invoke({"score", "--data", data, "--theta", "2.5", "--sigma2", "0.8", "--oracle"}).out);
  CHECK(dense.at("score").get<double>() == doctest::Approx(js.at("score").get<double>()).epsilon(1e-10));
  const auto ml = last_json_line(invoke({"score", "--data", data, "--theta", "2.5", "--sigma2", "0.8", "--objective", "ml"}).out);
  CHECK(ml.at("score").get<double>() == ml_neg2loglik(design, series.values, 2.5, 0.8));

  const auto est = invoke({"estimate", "--data", data});
  CHECK(est.code == 0);
  const auto ej = last_json_line(est.out);
  const auto direct = estimate_cv_joint(design, series.values, ParameterBox::make(0.1, 10, 0.3, 30));
  CHECK(ej.at("product").get<double>() == direct.product);
  CHECK(ej.at("boundary_flags") == direct.flags.str());

  const auto fs = last_json_line(invoke({"estimate", "--data", data, "--mode", "fixed-sigma", "--sigma1", "2"}).out);
  CHECK(fs.at("sigma2_hat").get<double>() == 2.0);
  const auto ft = last_json_line(invoke({"estimate", "--data", data, "--mode", "fixed-theta", "--theta2", "4"}).out);
  CHECK(ft.at("theta_hat").get<double>() == 4.0);
  const auto box = last_json_line(invoke({"estimate", "--data", data, "--box", "1,2,0.5,0.6", "--objective", "ml"}).out);
  CHECK(box.at("theta_hat").get<double>() >= 1.0);
  CHECK(box.at("sigma2_hat").get<double>() <= 0.6);
  CHECK(invoke({"estimate", "--data", data, "--box", "2,1,0.5,0.6"}).code == 1);
  CHECK(invoke({"estimate", "--data", data, "--objective", "ml", "--mode", "fixed-theta"}).code == 1);
}

TEST_CASE("trend configuration") {
  const auto cfg = write("trend.json", R"({"basis": "polynomial:1", "beta": [1, 2]})");
  const auto z = invoke({"simulate", "--design", "regular:80", "--theta", "3", "--sigma2", "1", "--seed", "3", "--trend", cfg});
  CHECK(z.code == 0);
  CHECK(z.out.rfind("index,s,z\n", 0) == 0);
  const auto data = write("z.csv", z.out);
  const auto est = invoke({"estimate", "--data", data, "--trend", cfg});
  CHECK(est.code == 0);
  CHECK(last_json_line(est.out).at("beta_hat").size() == 2);

  std::string cols = "c1,c2\n";
  for (int i = 0; i < 80; ++i) cols += "1," + std::to_string(i / 79.0) + "\n";
  write("F.csv", cols);
  const auto colcfg = write("cols.json", R"({"columns": "F.csv"})");
  CHECK(invoke({"estimate", "--data", data, "--trend", colcfg}).code == 0);
  CHECK(invoke({"score", "--data", data, "--theta", "3", "--sigma2", "1", "--trend", colcfg}).code == 0);

  const auto dup = write("dup.csv", [] {
    std::string s;
    for (int i = 0; i < 80; ++i) s += "1,2\n";
    return s;
  }());
  const auto dupcfg = write("dup.json", R"({"columns": ")" + dup + R"("})");
  const auto rank = invoke({"estimate", "--data", data, "--trend", dupcfg});
  CHECK(rank.code == 1);
  CHECK(last_json_line(rank.err).at("error") == "linear_dependence");
  CHECK(invoke({"estimate", "--data", data, "--trend", write("broken.json", "{")}).code == 1);
}

TEST_CASE("numerical failures map to exit code 3") {
  const auto data = write("close.csv", "s,y\n0,0.1\n0.5,-0.3\n0.5000000000001,-0.3\n1,0.4\n");
  const auto r = invoke({"score", "--data", data, "--theta", "1", "--sigma2", "1", "--oracle"});
  CHECK(r.code == 3);
  CHECK(last_json_line(r.err).at("error") == "ill_conditioned");
  CHECK(invoke({"score", "--data", data, "--theta", "1", "--sigma2", "1"}).code == 0);
}

TEST_CASE("experiment subcommand") {
  const auto out = (scratch() / "run").string();
  const auto r = invoke({"experiment", "--preset", "fig2-n50-regular", "--replicates", "40", "--threads", "2", "--out", out});
  CHECK(r.code == 0);
  for (const char* f : {"records.csv", "summary.json", "histogram.csv", "config.json"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(out) / f));
  }
  const auto line = last_json_line(r.out);
  CHECK(line.at("replicates") == 40);

  const auto again = (scratch() / "run2").string();
  CHECK(invoke({"experiment", "--preset", "fig2-n50-regular", "--replicates", "40", "--threads", "1", "--out", again}).code == 0);
  std::ifstream a(std::filesystem::path(out) / "records.csv");
  std::ifstream b(std::filesystem::path(again) / "records.csv");
  std::stringstream sa;
  std::stringstream sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  const auto cfg = write("exp.cfg", "design = regular:30\nreplicates = 10\nestimators = cv-joint,ml-joint\n");
  const auto c = invoke({"experiment", "--config", cfg, "--out", (scratch() / "run3").string(), "--seed", "5"});
  CHECK(c.code == 0);
  CHECK(count_lines(c.out) == 2);
  CHECK(invoke({"experiment", "--config", (scratch() / "missing.cfg").string()}).code == 2);
  CHECK(invoke({"experiment", "--preset", "fig9"}).code == 1);
}
