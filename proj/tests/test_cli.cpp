#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "choiceforge/analytics.hpp"
#include "choiceforge/io.hpp"
#include "cli.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using namespace choiceforge;
using choiceforge::cli::Json;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("choiceforge_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("CHOICEFORGE_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(std::vector<std::string> args) const {
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream out(path(name), std::ios::binary);
    out << text;
  }

  Json json(const std::string& name) const { return Json::parse(slurp(name)); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "5000", "--seed", "7", "--out", path("a.csv"),
                 "--truth", path("a.json")})
                .code,
            0);
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "5000", "--seed", "7", "--out", path("b.csv"),
                 "--truth", path("b.json")})
                .code,
            0);
  EXPECT_FALSE(slurp("a.csv").empty());
  EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
  EXPECT_EQ(slurp("a.json"), slurp("b.json"));
  EXPECT_EQ(json("a.json")["seed"], 7);
}

TEST_F(CliTest, SimulateInputErrors) {
  const auto missing = run({"simulate", "--n", "10"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_FALSE(missing.err.empty());
  EXPECT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "0", "--out", path("x.csv")}).code, 2);
  EXPECT_EQ(run({"simulate", "--spec", "nonexistent", "--out", path("x.csv")}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST_F(CliTest, SeedFallsBackToEnvironment) {
  setenv("CHOICEFORGE_SEED", "7", 1);
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "300", "--out", path("env.csv"), "--truth",
                 path("env.json")})
                .code,
            0);
  unsetenv("CHOICEFORGE_SEED");
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "300", "--seed", "7", "--out",
                 path("flag.csv"), "--truth", path("flag.json")})
                .code,
            0);
  EXPECT_EQ(slurp("env.csv"), slurp("flag.csv"));
  setenv("CHOICEFORGE_SEED", "seven", 1);
  EXPECT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "3", "--out", path("bad.csv")}).code, 2);
  unsetenv("CHOICEFORGE_SEED");
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  write("run.ini", "[simulate]\nspec = virtual-traveling-default\nn = 40\nseed = 3\nout = " + path("cfg.csv") +
                       "\ntruth = " + path("cfg.json") + "\n");
  ASSERT_EQ(run({"--config", path("run.ini"), "simulate", "--n", "25"}).code, 0);
  EXPECT_EQ(json("cfg.json")["n_observations"], 25);
  EXPECT_EQ(json("cfg.json")["seed"], 3);

  write("bad.ini", "[simulate]\nspec = virtual-traveling-default\ncolour = blue\n");
  EXPECT_EQ(run({"--config", path("bad.ini"), "simulate"}).code, 2);
}

TEST_F(CliTest, EstimateRecoversSimulatedTruth) {
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "5000", "--seed", "11", "--out",
                 path("d.csv"), "--truth", path("t.json")})
                .code,
            0);
  const auto r = run({"estimate", "--data", path("d.csv"), "--out", path("r.json"), "--text", path("r.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json report = json("r.json");
  const Json truth = json("t.json")["classes"][0]["betas"];
  EXPECT_EQ(report["model"], "mnl");
  EXPECT_EQ(report["converged"], true);
  EXPECT_GT(report["iterations"].get<int>(), 0);
  for (const auto& [name, value] : truth.items()) {
    const double est = report["betas"][name].get<double>();
    const double se = report["standard_errors"][name].get<double>();
    EXPECT_LT(std::abs(est - value.get<double>()), 3.0 * se) << name;
  }
  EXPECT_EQ(slurp("r.txt"), r.out);
}

TEST_F(CliTest, LatentClassWithOneClassMatchesMnl) {
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "3000", "--out", path("d.csv"), "--truth",
                 path("t.json")})
                .code,
            0);
  ASSERT_EQ(run({"estimate", "--data", path("d.csv"), "--out", path("mnl.json")}).code, 0);
  ASSERT_EQ(run({"estimate", "--data", path("d.csv"), "--model", "lcm", "--classes", "1", "--out", path("lcm.json")}).code,
            0);
  const Json a = json("mnl.json")["betas"];
  const Json b = json("lcm.json")["betas"];
  for (const auto& [name, v] : a.items()) EXPECT_NEAR(b[name].get<double>(), v.get<double>(), 1e-8) << name;
}

TEST_F(CliTest, MixedLogitReportCarriesStddevs) {
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-mixed", "--n", "2000", "--out", path("d.csv"), "--truth",
                 path("t.json")})
                .code,
            0);
  const auto r = run({"estimate", "--data", path("d.csv"), "--model", "mxl", "--draws", "30", "--out", path("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json m = json("m.json");
  EXPECT_EQ(m["model"], "mxl");
  EXPECT_EQ(m["random"], Json::array({"price"}));
  EXPECT_GE(m["stddevs"]["price"].get<double>(), 0.0);
  EXPECT_EQ(m["draws"], 30);
}

TEST_F(CliTest, EstimateExitCodes) {
  write("const.csv",
        "obs_id,alt_id,chosen,x,price\n"
        "1,0,0,0,0\n1,1,1,0.5,3\n1,2,0,1.5,3\n"
        "2,0,1,0,0\n2,1,0,0.2,3\n2,2,0,0.9,3\n"
        "3,0,0,0,0\n3,1,0,0.7,3\n3,2,1,0.1,3\n");
  const auto ident = run({"estimate", "--data", path("const.csv"), "--out", path("r.json")});
  EXPECT_EQ(ident.code, 4);
  EXPECT_NE(ident.err.find("price"), std::string::npos) << ident.err;

  write("bad.csv", "obs_id,alt_id,chosen,x,price\n1,1,1,0.5,3\n1,2,0,oops,3\n");
  const auto bad = run({"estimate", "--data", path("bad.csv"), "--out", path("r.json")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("row 3"), std::string::npos) << bad.err;
  EXPECT_NE(bad.err.find("'x'"), std::string::npos) << bad.err;

  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "2000", "--out", path("d.csv"), "--truth",
                 path("t.json")})
                .code,
            0);
  const auto capped = run({"estimate", "--data", path("d.csv"), "--max-iterations", "1", "--out", path("r.json")});
  EXPECT_EQ(capped.code, 3);
  EXPECT_EQ(json("r.json")["converged"], false);
  EXPECT_EQ(run({"estimate", "--data", path("missing.csv"), "--out", path("r.json")}).code, 2);
  EXPECT_EQ(run({"estimate", "--data", path("d.csv"), "--model", "probit"}).code, 2);
}

TEST_F(CliTest, AnalyzePrintsWtpAndRoundTrips) {
  write("toy.json", R"({"betas": {"quality": 0.5, "price": -0.25}})");
  const auto r = run({"analyze", "--report", path("toy.json"), "--out", path("a.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wtp quality 2.0\n"), std::string::npos) << r.out;

  const Json a = json("a.json");
  const auto model = cli::read_model_report(path("toy.json"));
  const auto w = wtp(model.params, model.schema);
  EXPECT_NEAR(a["wtp"]["quality"].get<double>(), w.per_attribute_wtp.at("quality"), 1e-9);
  EXPECT_NEAR(a["price_coefficient"].get<double>(), -0.25, 1e-9);
  ChoiceScenario s;
  s.alternatives.push_back(AttributeVector{{a["reference_offer"]["quality"].get<double>(),
                                            a["reference_offer"]["price"].get<double>()},
                                           {}});
  s.includes_outside_option = true;
  EXPECT_NEAR(a["price_derivative"].get<double>(), price_derivative(model.params, model.schema, s, 0), 1e-9);
  EXPECT_NEAR(a["market_potential"].get<double>(),
              market_potential(model.params, s, a["population"].get<double>()), 1e-9);
}

TEST_F(CliTest, AnalyzeRejectsPositivePriceCoefficient) {
  write("bad.json", R"({"betas": {"quality": 0.5, "price": 0.25}})");
  EXPECT_EQ(run({"analyze", "--report", path("bad.json"), "--out", path("a.json")}).code, 5);
  write("junk.json", "{not json");
  EXPECT_EQ(run({"analyze", "--report", path("junk.json"), "--out", path("a.json")}).code, 2);
}

TEST_F(CliTest, AnalyzeInvestmentRule) {
  write("toy.json", R"({"betas": {"quality": 0.5, "price": -0.25}})");
  const auto r = run({"analyze", "--report", path("toy.json"), "--out", path("a.json"), "--invest-attribute", "quality",
                      "--delta-attribute", "1", "--delta-price", "1"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json("a.json")["investment"]["recommendation"], "INVEST");
}

TEST_F(CliTest, OptimizeToyPriceAndCurve) {
  write("toy.json", R"({"betas": {"quality": 1.0, "price": -1.0}})");
  write("design.ini", "[price]\nlower = 0\nupper = 6\n[bounds]\nquality = 2\n[optimize]\ngrid_points = 601\n");
  const auto r = run({"optimize", "--report", path("toy.json"), "--design", path("design.ini"), "--out", path("s.json"),
                      "--curve", path("c.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json("s.json")["price"].get<double>(), 2.0, 0.01);

  std::istringstream curve(slurp("c.csv"));
  std::string line;
  std::getline(curve, line);
  EXPECT_EQ(line, "price,utility,probability,revenue");
  std::size_t rows = 0;
  while (std::getline(curve, line)) {
    ++rows;
    std::vector<double> v;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) v.push_back(io::parse_double(cell));
    ASSERT_EQ(v.size(), 4u);
    // Values are written with 9 significant digits, so the identity holds
    // to that resolution in the file.
    EXPECT_NEAR(v[3], v[0] * v[2], 1e-8 * std::max(1.0, std::abs(v[3])));
  }
  EXPECT_EQ(rows, 601u);

  const auto override = run({"optimize", "--report", path("toy.json"), "--design", path("design.ini"), "--grid-points",
                             "11", "--out", path("s2.json"), "--curve", path("c2.csv")});
  ASSERT_EQ(override.code, 0);
  const std::string small = slurp("c2.csv");
  EXPECT_EQ(std::count(small.begin(), small.end(), '\n'), 12);
}

TEST_F(CliTest, OptimizeErrors) {
  write("up.json", R"({"betas": {"quality": 1.0, "price": 0.5}})");
  write("design.ini", "[price]\nlower = 0\nupper = 6\n[bounds]\nquality = 2\n");
  EXPECT_EQ(run({"optimize", "--report", path("up.json"), "--design", path("design.ini"), "--out", path("s.json"),
                 "--curve", path("c.csv")})
                .code,
            5);
  write("toy.json", R"({"betas": {"quality": 1.0, "price": -1.0}})");
  write("unknown.ini", "[price]\nlower = 0\nupper = 6\n[bounds]\nquality = 2\ncolour = 3\n");
  EXPECT_EQ(run({"optimize", "--report", path("toy.json"), "--design", path("unknown.ini"), "--out", path("s.json"),
                 "--curve", path("c.csv")})
                .code,
            2);
}

TEST_F(CliTest, ChainRecoversComposedWeights) {
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-chain", "--n", "10000", "--seed", "5", "--out", path("d.csv"),
                 "--truth", path("t.json")})
                .code,
            0);
  const auto r = run({"chain", "--data", path("d.csv"), "--stages", "authenticity;enjoyment,involvement", "--out",
                      path("c.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json truth = json("t.json")["chain"]["links"];
  const Json composed = json("c.json")["composed"]["weights"];
  for (const auto& out : {"enjoyment", "involvement"}) {
    const double w2 = truth[1]["weights"][out]["authenticity"].get<double>();
    for (const auto& [indicator, w1] : truth[0]["weights"]["authenticity"].items()) {
      EXPECT_NEAR(composed[out][indicator].get<double>(), w2 * w1.get<double>(), 1e-2) << out << " <- " << indicator;
    }
  }
}

TEST_F(CliTest, IdentityChainMatchesDirectEstimate) {
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "3000", "--out", path("d.csv"), "--truth",
                 path("t.json")})
                .code,
            0);
  // Copy every indicator into a construct column of its own.
  auto data = io::read_dataset_csv_file(path("d.csv"));
  const std::vector<std::string> indicators{"sensing_accuracy", "downlink_rate", "latency", "hardware_comfort"};
  for (const auto& name : indicators) data.construct_names.push_back("c_" + name);
  for (auto& obs : data.observations) {
    for (auto& alt : obs.scenario.alternatives) {
      alt.constructs.assign(alt.values.begin(), alt.values.begin() + 4);
    }
  }
  io::write_dataset_csv(path("id.csv"), data);
  ASSERT_EQ(run({"estimate", "--data", path("d.csv"), "--out", path("r.json")}).code, 0);
  ASSERT_EQ(run({"chain", "--data", path("id.csv"), "--out", path("c.json")}).code, 0);
  const Json direct = json("r.json");
  const Json terminal = json("c.json")["terminal"];
  for (const auto& name : indicators) {
    const double a = direct["betas"][name].get<double>();
    const double b = terminal["betas"]["c_" + name].get<double>();
    EXPECT_LT(std::abs(a - b), 2.0 * direct["standard_errors"][name].get<double>()) << name;
  }
  EXPECT_NEAR(terminal["betas"]["price"].get<double>(), direct["betas"]["price"].get<double>(),
              2.0 * direct["standard_errors"]["price"].get<double>());
}

TEST_F(CliTest, ChainNeedsConstructColumns) {
  ASSERT_EQ(run({"simulate", "--spec", "virtual-traveling-default", "--n", "100", "--out", path("d.csv"), "--truth",
                 path("t.json")})
                .code,
            0);
  EXPECT_EQ(run({"chain", "--data", path("d.csv"), "--out", path("c.json")}).code, 2);
}
