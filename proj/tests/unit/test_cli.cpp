#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chgp/cli.hpp"

using namespace chgp;
namespace fs = std::filesystem;

namespace {

const std::string kToy = std::string(CHGP_TEST_DATA) + "/toy";

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "chgp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("chgp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

io::json without_wall_time(io::json j) {
  j.erase("wall_time_s");
  return j;
}

}  // namespace

TEST_F(Cli, ToyPipelineMatchesGoldenFiles) {
  const auto sim = run_cli({"--seed", "7", "simulate", "--config", kToy + "/simulate.ini", "--out", path("toy.csv")});
  ASSERT_EQ(sim.code, 0) << sim.err;
  EXPECT_EQ(slurp(path("toy.csv")), slurp(kToy + "/toy.csv"));
  const auto man = io::parse_json_file(path("toy.csv") + ".manifest.json");
  EXPECT_EQ(man.at("seed"), 7);
  EXPECT_EQ(man.at("command"), "simulate");
  EXPECT_EQ(man.at("config"), slurp(kToy + "/simulate.ini"));

  const auto f = run_cli({"--seed", "7", "fit", "--data", kToy + "/toy.csv", "--config", kToy + "/fit.ini", "--out",
                          path("fit.json")});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_EQ(slurp(path("fit.json")), slurp(kToy + "/fit_golden.json"));

  const auto p = run_cli({"predict", "--fit", kToy + "/fit_golden.json", "--targets", kToy + "/targets.csv", "--out",
                          path("pred.csv")});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(slurp(path("pred.csv")), slurp(kToy + "/predict_golden.csv"));
}

TEST_F(Cli, TrainingPointTargetHasZeroSd) {
  ASSERT_EQ(run_cli({"predict", "--fit", kToy + "/fit_golden.json", "--targets", kToy + "/toy.csv", "--out",
                     path("pred.csv")})
                .code,
            0);
  const auto pred = io::read_csv_file(path("pred.csv"));
  const auto data = io::read_csv_file(kToy + "/toy.csv");
  ASSERT_EQ(pred.header, (std::vector<std::string>{"x1", "x2", "mean", "sd", "lo95", "hi95"}));
  ASSERT_EQ(pred.n_rows(), data.n_rows());
  for (std::size_t i = 0; i < pred.rows.size(); ++i) {
    EXPECT_LE(pred.rows[i][3], 1e-8);
    EXPECT_NEAR(pred.rows[i][2], data.rows[i][2], 1e-8);
  }
}

TEST_F(Cli, GlsPredictionAndSphericalData) {
  ASSERT_EQ(run_cli({"predict", "--fit", kToy + "/fit_golden.json", "--targets", kToy + "/targets.csv", "--out",
                     path("gls.csv"), "--mean", "gls"})
                .code,
            0);
  EXPECT_EQ(run_cli({"predict", "--fit", kToy + "/fit_golden.json", "--targets", kToy + "/targets.csv", "--out",
                     path("x.csv"), "--mean", "ols"})
                .code,
            1);

  write(path("sph.csv"), "lon,lat,z\n0,0,1.0\n10,5,0.5\n-20,30,-0.2\n45,-10,0.3\n100,60,1.1\n-150,-45,0.0\n");
  write(path("sph.ini"), "[kernel]\nfamily = matern\nnu = 0.5\nphi = 1000\n[fit]\nn_starts = 1\n");
  const auto f = run_cli({"fit", "--data", path("sph.csv"), "--config", path("sph.ini"), "--out", path("sph.json"),
                          "--metric", "chordal"});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_EQ(io::parse_json_file(path("sph.json")).at("data").at("metric"), "chordal");
  write(path("sph_t.csv"), "lon,lat\n5,5\n");
  EXPECT_EQ(run_cli({"predict", "--fit", path("sph.json"), "--targets", path("sph_t.csv"), "--out", path("p.csv")}).code,
            0);
  const auto euclid = run_cli({"fit", "--data", path("sph.csv"), "--config", path("sph.ini"), "--out", path("e.json")});
  EXPECT_EQ(euclid.code, 1);
}

TEST_F(Cli, SpectralOutputs) {
  write(path("m.ini"), "[kernel]\nfamily = matern\nnu = 0.5\nphi = 1\n");
  const auto m = run_cli({"spectral", "--config", path("m.ini"), "--omega", "0,1,2"});
  ASSERT_EQ(m.code, 0) << m.err;
  std::istringstream in(m.out);
  const auto t = io::read_csv(in, "stdout");
  EXPECT_EQ(t.header, (std::vector<std::string>{"omega", "density"}));
  ASSERT_EQ(t.n_rows(), 3);
  EXPECT_NEAR(t.rows[0][1], 1.0 / std::numbers::pi, 1e-12);

  write(path("c.ini"), "[kernel]\nfamily = ch\nnu = 0.5\nalpha = 2\nbeta = 1\n");
  const auto c = run_cli({"spectral", "--config", path("c.ini"), "--grid", "0.1,100,5", "--dim", "2", "--out",
                          path("s.csv")});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto s = io::read_csv_file(path("s.csv"));
  EXPECT_EQ(s.header, (std::vector<std::string>{"omega", "density", "tail"}));
  EXPECT_EQ(s.n_rows(), 5);
  EXPECT_NEAR(s.rows[4][0], 100.0, 1e-12);

  EXPECT_EQ(run_cli({"spectral", "--config", path("m.ini")}).code, 1);
  EXPECT_EQ(run_cli({"spectral", "--config", path("m.ini"), "--omega", "1", "--grid", "1,2,3"}).code, 1);
  EXPECT_EQ(run_cli({"spectral", "--config", path("m.ini"), "--omega", "-1"}).code, 1);
}

TEST_F(Cli, SpectralSmallAlphaIsNumericalFailure) {
  write(path("c.ini"), "[kernel]\nfamily = ch\nnu = 0.5\nalpha = 0.5\nbeta = 1\n");
  const auto r = run_cli({"spectral", "--config", path("c.ini"), "--omega", "1", "--dim", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("alpha > d/2"), std::string::npos) << r.err;
}

TEST_F(Cli, MalformedCsvIsUsageError) {
  write(path("bad.csv"), "x1,x2,z\n0,0,1\n0.5,2\n");
  auto r = run_cli({"fit", "--data", path("bad.csv"), "--config", kToy + "/fit.ini", "--out", path("f.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.csv:3: expected 3 columns, found 2"), std::string::npos) << r.err;

  write(path("nan.csv"), "x1,x2,z\n0,0,1\n0.5,0.2,oops\n");
  r = run_cli({"fit", "--data", path("nan.csv"), "--config", kToy + "/fit.ini", "--out", path("f.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nan.csv:3: non-numeric value 'oops' in column 'z'"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownConfigKeyIsUsageError) {
  write(path("typo.ini"), "[kernel]\nfamily = ch\nnu = 0.5\nalpha = 2\nbeta = 0.3\n[fit]\nn_start = 2\n");
  const auto r = run_cli({"fit", "--data", kToy + "/toy.csv", "--config", path("typo.ini"), "--out", path("f.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("typo.ini:7: unknown key 'fit.n_start'"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("f.json")));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({"fit", "--data", "x.csv"}).code, 1);
  EXPECT_EQ(run_cli({"fit", "--data", kToy + "/toy.csv", "--config", kToy + "/fit.ini", "--out", path("f.json"),
                     "--metric", "manhattan"})
                .code,
            1);
  EXPECT_EQ(run_cli({"fit", "--data", path("missing.csv"), "--config", kToy + "/fit.ini", "--out", path("f.json")})
                .code,
            1);
  EXPECT_EQ(run_cli({"bench", "--repeats", "0"}).code, 1);
}

TEST_F(Cli, NumericalFailureExitCode) {
  write(path("flat.csv"), "x1,x2,z\n0,0,1\n0.5,0.2,1\n0.9,0.7,1\n0.2,0.8,1\n");
  write(path("m.ini"), "[kernel]\nfamily = matern\nnu = 0.5\nphi = 1\n[model]\nmean = 1\n[fit]\nn_starts = 1\n");
  const auto r = run_cli({"fit", "--data", path("flat.csv"), "--config", path("m.ini"), "--out", path("f.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("numerical error"), std::string::npos) << r.err;
}

TEST_F(Cli, SimulateDesignsAndReplicates) {
  write(path("g.ini"),
        "[kernel]\nfamily = gc\ndelta = 1\nlambda = 2\nphi = 0.3\n[model]\nnugget = 0.1\n[design]\ntype = grid\n"
        "bounds = 0,1,0,2\ncounts = 3,4\n[simulate]\nn_reps = 3\n");
  const auto r = run_cli({"simulate", "--config", path("g.ini"), "--out", path("g.csv"), "--manifest", path("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = io::read_csv_file(path("g.csv"));
  EXPECT_EQ(t.header, (std::vector<std::string>{"x1", "x2", "z1", "z2", "z3"}));
  EXPECT_EQ(t.n_rows(), 12);
  EXPECT_TRUE(fs::exists(path("m.json")));

  write(path("l.ini"), "[kernel]\nfamily = matern\nnu = 1.5\nphi = 0.3\n[design]\ntype = lhs\nbounds = 0,1\nn = 8\n");
  ASSERT_EQ(run_cli({"simulate", "--config", path("l.ini"), "--out", path("l.csv")}).code, 0);
  EXPECT_EQ(io::read_csv_file(path("l.csv")).n_rows(), 8);

  write(path("f.ini"), "[kernel]\nfamily = matern\nnu = 0.5\nphi = 0.3\n[design]\ntype = file\npath = " + kToy +
                           "/targets.csv\n");
  ASSERT_EQ(run_cli({"simulate", "--config", path("f.ini"), "--out", path("f.csv")}).code, 0);
  EXPECT_EQ(io::read_csv_file(path("f.csv")).n_rows(), 7);

  write(path("bad.ini"), "[kernel]\nfamily = matern\nnu = 0.5\nphi = 0.3\n[design]\ntype = sobol\n");
  EXPECT_EQ(run_cli({"simulate", "--config", path("bad.ini"), "--out", path("b.csv")}).code, 1);
}

TEST_F(Cli, ExperimentsAreDeterministic) {
  const std::vector<std::pair<std::string, std::string>> studies{
      {"pred",
       "[study]\ntype = prediction\ncase_id = tiny\ncandidates = truth, ch\nn_train = 30\nlhs_candidates = 5\n"
       "n_reps = 2\ndomain = 0,1,0,1\ntarget_counts = 3,3\ncurve_lags = 0, 0.1\n[truth]\nfamily = matern\nnu = 0.5\n"
       "effective_range = 0.3\n[fit]\nn_starts = 1\n[krige]\nmean = gls\n"},
      {"asym",
       "[study]\ntype = asymptotic\nmodes = theta0, alpha0_sqrt2beta0\nn_list = 20\nn_reps = 3\ngrid_counts = 8,8\n"
       "[truth]\nfamily = ch\nnu = 0.5\nalpha = 2\nbeta = 0.2\n"},
      {"eff",
       "[study]\ntype = efficiency\nn_list = 20, 40\nn_reps = 3\n[truth]\nfamily = matern\nnu = 0.5\nphi = 0.2\n"
       "[predictor]\nfamily = ch\nnu = 0.5\nalpha = 2\nbeta = 0.3\n"},
      {"real",
       "[study]\ntype = realizations\nkernels = 2\nn_points = 50\n[kernel.0]\nfamily = matern\nnu = 0.5\nphi = 200\n"
       "[kernel.1]\nfamily = ch\nnu = 0.5\nalpha = 0.5\nbeta = 200\n"}};
  for (const auto& [name, text] : studies) {
    write(path(name + ".ini"), text);
    std::vector<std::string> listing[2];
    io::json manifests[2];
    for (int run = 0; run < 2; ++run) {
      const std::string out = path(name + "_" + std::to_string(run));
      const auto r = run_cli({"--seed", "11", "--threads", run == 0 ? "1" : "2", "experiment", "--config",
                              path(name + ".ini"), "--out-dir", out});
      ASSERT_EQ(r.code, 0) << name << ": " << r.err;
      manifests[run] = io::parse_json_file(out + "/manifest.json");
      for (const auto& f : manifests[run].at("outputs")) listing[run].push_back(slurp(f.get<std::string>()));
    }
    ASSERT_FALSE(listing[0].empty());
    EXPECT_EQ(listing[0], listing[1]) << name;
    EXPECT_EQ(manifests[0].at("seed"), 11);
    EXPECT_EQ(manifests[0].at("config"), text);
    manifests[0].erase("threads");
    manifests[1].erase("threads");
    io::json a = without_wall_time(manifests[0]);
    io::json b = without_wall_time(manifests[1]);
    a.erase("outputs");
    b.erase("outputs");
    EXPECT_EQ(a, b) << name;
  }
  const auto real = io::read_csv_file(path("real_0/realizations.csv"));
  EXPECT_EQ(real.header, (std::vector<std::string>{"x", "k0", "k1"}));
  EXPECT_EQ(real.n_rows(), 50);

  write(path("bad.ini"), "[study]\ntype = regression\n");
  EXPECT_EQ(run_cli({"experiment", "--config", path("bad.ini"), "--out-dir", path("bad")}).code, 1);
}

TEST_F(Cli, BenchWritesReport) {
  const auto r = run_cli({"bench", "--n-evals", "2000", "--repeats", "2", "--out", path("b.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::parse_json_file(path("b.json"));
  ASSERT_EQ(j.at("runs").size(), 2u);
  EXPECT_GT(j.at("runs").at(0).at("ratio").get<double>(), 0.0);
}
