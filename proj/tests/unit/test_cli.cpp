#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "depcen/io.hpp"
#include "oracles/kaplan_meier.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = depcen::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("depcen_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const std::vector<std::string> kQuick{"--bag", "6", "--budget", "500", "--weight-reps", "30",
                                      "--region-fits", "10", "--threads", "1"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("simulate") {
  TempDir dir;
  const auto args = std::vector<std::string>{"simulate", "--copula", "normal", "--tau", "0.8", "--marg-t", "exp:0.025",
                                             "--marg-c", "exp:0.039", "--n", "500", "--seed", "7", "--out", dir / "a.csv"};
  const auto r = cli(args);
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "a.csv");
  std::istringstream in(csv);
  CHECK(depcen::read_dataset_csv(in).records.size() == 500);
  const auto side = nlohmann::json::parse(slurp(dir / "a.json"));
  CHECK(side["tau"] == 0.8);
  CHECK(side["seed"] == 7);
  CHECK(side["marginal_t"]["rate"] == 0.025);

  auto again = args;
  again.back() = dir / "b.csv";
  REQUIRE(cli(again).code == 0);
  CHECK(slurp(dir / "b.csv") == csv);
  CHECK(slurp(dir / "b.json") == slurp(dir / "a.json"));

  auto zero = args;
  zero[10] = "0";
  REQUIRE(zero[9] == "--n");
  CHECK(cli(zero).code == 2);
  CHECK(cli({"simulate", "--marg-t", "exp:0.1"}).code == 2);
  CHECK(cli({"simulate", "--copula", "clayton", "--tau", "-0.3", "--marg-t", "exp:0.1", "--marg-c", "exp:0.1",
             "--n", "10", "--out", dir / "c.csv"})
            .code == 2);

  REQUIRE(cli({"simulate", "--copula", "clayton", "--tau", "0.8", "--marg-t", "weibull:2,0.25", "--marg-c",
               "exp:0.2", "--n", "50", "--rct", "--beta-t", "-0.5", "--beta-c", "-0.5", "--out", dir / "r.csv"})
              .code == 0);
  CHECK(slurp(dir / "r.csv").rfind("x,delta,trt\n", 0) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "r.json"))["rct"]["beta_t"] == -0.5);
}

TEST_CASE("estimate") {
  TempDir dir;
  REQUIRE(cli({"simulate", "--copula", "normal", "--tau", "0.8", "--marg-t", "lognormal:2.2,1", "--marg-c",
               "lognormal:2.0,0.25", "--n", "2000", "--seed", "3", "--out", dir / "d.csv"})
              .code == 0);
  const auto args = with({"estimate", "--data", dir / "d.csv", "--copula", "normal", "--marg-t", "lognormal",
                          "--marg-c", "lognormal", "--seed", "5"},
                         kQuick);
  const auto r = cli(args);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["method"] == "gmm");
  CHECK(j["voted_range"]["label"] == "High");
  CHECK(cli(args).out == r.out);
  CHECK(nlohmann::ordered_json::parse(r.out).dump(2) + "\n" == r.out);

  REQUIRE(cli(with(args, {"--out", dir / "e.json"})).code == 0);
  CHECK(slurp(dir / "e.json") == r.out);

  const auto m = cli({"estimate", "--data", dir / "d.csv", "--method", "mle", "--marg-t", "lognormal:2.2,1"});
  REQUIRE(m.code == 0);
  CHECK(nlohmann::json::parse(m.out)["method"] == "mle");

  std::string events = "x,delta\n";
  for (int i = 1; i <= 20; ++i) events += std::to_string(i) + ",1\n";
  spit(dir / "events.csv", events);
  CHECK(cli(with({"estimate", "--data", dir / "events.csv"}, kQuick)).code == 3);

  spit(dir / "bad.csv", "x,delta\n1,1\n2,0\nthree,1\n");
  const auto bad = cli({"estimate", "--data", dir / "bad.csv"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("line 4") != std::string::npos);

  CHECK(cli({"estimate", "--data", dir / "missing.csv"}).code == 2);
  CHECK(cli({"estimate", "--data", dir / "d.csv", "--method", "ols"}).code == 2);
  CHECK(cli({"estimate", "--data", dir / "d.csv", "--copula", "tcopula"}).code == 2);
}

TEST_CASE("bootstrap") {
  TempDir dir;
  REQUIRE(cli({"simulate", "--copula", "normal", "--tau", "0.5", "--marg-t", "lognormal:2.2,1", "--marg-c",
               "lognormal:2.0,0.25", "--n", "300", "--seed", "4", "--out", dir / "d.csv"})
              .code == 0);
  const auto r = cli({"bootstrap", "--data", dir / "d.csv", "--method", "mle", "--b", "200", "--alpha", "0.05",
                      "--seed", "2", "--threads", "2"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["bootstrap"]["lo_rank"] == 5);
  CHECK(j["bootstrap"]["hi_rank"] == 195);
  CHECK(j["bootstrap"]["B"] == 200);
  const auto one = cli({"bootstrap", "--data", dir / "d.csv", "--method", "mle", "--b", "200", "--seed", "2",
                        "--threads", "1"});
  CHECK(one.out == r.out);

  const auto g = cli(with({"bootstrap", "--data", dir / "d.csv", "--b", "20", "--reuse-region", "--seed", "3"}, kQuick));
  REQUIRE(g.code == 0);
  CHECK(nlohmann::json::parse(g.out)["bootstrap"]["estimates"].size() == 20);

  CHECK(cli({"bootstrap", "--data", dir / "d.csv", "--b", "5"}).code == 2);
  CHECK(cli({"bootstrap", "--data", dir / "nope.csv"}).code == 2);
}

TEST_CASE("study") {
  TempDir dir;
  spit(dir / "grid.json", R"({
  "runs": 1, "inner_B": 20, "seed": 9,
  "cells": [
    {"name": "mle", "copula": "normal", "tau": 0.5, "marginal_t": "weibull:0.63,0.06",
     "marginal_c": "weibull:0.86,0.04", "n": 300, "method": "mle"}
  ]
})");
  const auto r = cli({"study", "--grid", dir / "grid.json", "--json", dir / "s.json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("cell,method,copula,marginal_t,marginal_c,n,true_tau,point_estimate,bootstrap_mae,"
                    "bootstrap_se,ci_lo,ci_hi\n",
                    0) == 0);
  const auto s = nlohmann::json::parse(slurp(dir / "s.json"));
  CHECK(s["cells"][0]["records"].size() == 1);

  const auto summary = cli({"study", "--grid", dir / "grid.json", "--runs", "3", "--out", dir / "s.csv"});
  REQUIRE(summary.code == 0);
  CHECK(slurp(dir / "s.csv").find(",cp,mpe,") != std::string::npos);
  CHECK(cli({"study", "--grid", dir / "grid.json", "--runs", "3", "--threads", "3"}).out == slurp(dir / "s.csv"));

  spit(dir / "bad.json", R"({"cells": [{"copula": "normal", "tau": 0.5, "n": 10}]})");
  CHECK(cli({"study", "--grid", dir / "bad.json"}).code == 2);
  spit(dir / "typo.json", R"({"cells": [], "options": {"bags": 3}})");
  CHECK(cli({"study", "--grid", dir / "typo.json"}).code == 2);
  CHECK(cli({"study", "--grid", dir / "none.json"}).code == 2);
}

TEST_CASE("curves") {
  TempDir dir;
  REQUIRE(cli({"simulate", "--copula", "clayton", "--tau", "0.8", "--marg-t", "weibull:0.63,0.06", "--marg-c",
               "weibull:0.86,0.04", "--n", "400", "--seed", "6", "--out", dir / "d.csv"})
              .code == 0);
  const auto r = cli({"curves", "--data", dir / "d.csv", "--copula", "clayton", "--tau", "0", "0.3", "0.8",
                      "--target", "both", "--prefix", dir / "cg"});
  REQUIRE(r.code == 0);

  auto read_curve = [](const std::string& path) {
    std::istringstream in(slurp(path));
    std::string line;
    std::getline(in, line);
    CHECK(line == "time,survival");
    std::vector<std::pair<double, double>> pts;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      pts.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    return pts;
  };

  // tau = 0 is the product-limit estimator.
  std::istringstream data_in(slurp(dir / "d.csv"));
  const auto data = depcen::read_dataset_csv(data_in).records;
  std::vector<std::pair<double, int>> obs;
  for (const auto& rec : data) obs.emplace_back(rec.x, rec.delta);
  const auto km = oracle::kaplan_meier(obs, 1);
  const auto at0 = read_curve(dir / "cg_T_tau0.csv");
  REQUIRE(at0.size() == km.size());
  for (std::size_t i = 0; i < km.size(); ++i) {
    CHECK(at0[i].first == doctest::Approx(km[i].time).epsilon(1e-15));
    CHECK(at0[i].second == doctest::Approx(km[i].survival).epsilon(1e-12));
  }

  // Positive dependence: independence overstates survival of T.
  const auto at8 = read_curve(dir / "cg_T_tau0.8.csv");
  REQUIRE(at8.size() == at0.size());
  for (std::size_t i = 0; i < at0.size(); ++i) CHECK(at0[i].second >= at8[i].second - 1e-12);
  CHECK(fs::exists(dir / "cg_C_tau0.3.csv"));

  CHECK(cli({"curves", "--data", dir / "d.csv", "--copula", "normal", "--tau", "0.5", "--prefix", dir / "n"}).code == 2);
  CHECK(cli({"curves", "--data", dir / "d.csv", "--copula", "normal", "--tau", "0.5", "--clayton-proxy", "--prefix",
             dir / "n"})
            .code == 0);
  spit(dir / "empty.csv", "x,delta\n");
  CHECK(cli({"curves", "--data", dir / "empty.csv"}).code == 2);
}

TEST_CASE("config file and usage") {
  TempDir dir;
  spit(dir / "sim.toml", "[simulate]\ncopula = \"frank\"\ntau = 0.3\nmarg-t = \"exp:0.1\"\nmarg-c = \"exp:0.2\"\nn = 40\n");
  REQUIRE(cli({"--config", dir / "sim.toml", "simulate", "--out", dir / "c.csv"}).code == 0);
  const auto side = nlohmann::json::parse(slurp(dir / "c.json"));
  CHECK(side["copula"] == "frank");
  CHECK(side["n"] == 40);

  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}
