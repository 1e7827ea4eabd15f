#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#ifndef ALLOCATRON_CLI_PATH
#error "ALLOCATRON_CLI_PATH must point at the CLI binary"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args, const std::string& redirect = "2>/dev/null") {
  std::string command = std::string(ALLOCATRON_CLI_PATH) + " " + args + " " + redirect;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  std::string output;
  char buffer[4096];
  std::size_t got = 0;
  while ((got = fread(buffer, 1, sizeof(buffer), pipe)) > 0) output.append(buffer, got);
  int status = pclose(pipe);
  RunResult result;
  result.output = output;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string make_temp_dir() {
  char pattern[] = "/tmp/allocatron_cli_XXXXXX";
  char* dir = mkdtemp(pattern);
  if (dir == nullptr) throw std::runtime_error("mkdtemp failed");
  return dir;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("bounds --depth 2 --width 81 --heads 1").exit_code, 0);
  EXPECT_EQ(run("--help").exit_code, 0);
  EXPECT_EQ(run("bounds --depth 2").exit_code, 2);
  EXPECT_EQ(run("no-such-command").exit_code, 2);
  EXPECT_EQ(run("bounds --depth 4 --width 81 --heads 1").exit_code, 1);

  RunResult boundary = run("bounds --depth 4 --width 81 --heads 1", "2>&1 1>/dev/null");
  EXPECT_NE(boundary.output.find("error: RegimeMismatch"), std::string::npos);
}

TEST(Cli, DeterministicOutput) {
  RunResult first = run("table1");
  RunResult second = run("table1");
  EXPECT_EQ(first.exit_code, 0);
  EXPECT_EQ(first.output, second.output);
}

TEST(Cli, BoundsJson) {
  RunResult result = run("bounds --depth 2 --width 81 --heads 1");
  ASSERT_EQ(result.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  EXPECT_NEAR(doc.at("log3_lower").get<double>(), 3.357762781432299, 1e-12);
  EXPECT_NEAR(doc.at("log3_upper").get<double>(), 16.04467487836565, 1e-12);
  EXPECT_EQ(doc.at("regime").get<std::string>(), "DepthEfficiency");
}

TEST(Cli, RegimeJson) {
  RunResult result = run("regime --depth 5 --width 81");
  ASSERT_EQ(result.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  EXPECT_EQ(doc.at("regime").get<std::string>(), "DepthInefficiency");
  EXPECT_NEAR(doc.at("depth_threshold").get<double>(), 4.0, 1e-12);
}

TEST(Cli, EquivalentWidth) {
  RunResult result =
      run("equiv-width --depth 6 --width 3000 --heads 1 --shallow-depth 3");
  ASSERT_EQ(result.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  EXPECT_FALSE(doc.at("infinite").get<bool>());
  EXPECT_EQ(doc.at("width").get<std::uint64_t>(), 78933218ull);
  EXPECT_NEAR(doc.at("target_log3_lower").get<double>(), 215.17460505692648, 1e-6);
}

TEST(Cli, FitOnBundledPoints) {
  RunResult result = run("fit");
  ASSERT_EQ(result.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  EXPECT_NEAR(doc.at("a").get<double>(), 5.0396668131, 1e-9);
  EXPECT_NEAR(doc.at("b").get<double>(), 0.0555008070, 1e-9);
  EXPECT_NEAR(doc.at("chi2_red").get<double>(), 0.8549337989, 1e-9);
  EXPECT_EQ(doc.at("dof").get<int>(), 3);

  RunResult text = run("fit --format text");
  ASSERT_EQ(text.exit_code, 0);
  EXPECT_NE(text.output.find("a ="), std::string::npos);
}

TEST(Cli, TransitionSizeMode) {
  RunResult result = run("transition --depth 96");
  ASSERT_EQ(result.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  EXPECT_NEAR(doc.at("n").get<double>(), 1164432361964.4663, 1e-3);
  EXPECT_NEAR(doc.at("dn").get<double>(), 226108659299.0454, 1e-3);

  EXPECT_EQ(run("transition").exit_code, 2);
}

TEST(Cli, TransitionEstimateMode) {
  std::string dir = make_temp_dir();
  std::ostringstream shallow;
  shallow << "depth,width,test_loss,loss_std\n";
  std::ostringstream deep;
  deep << "depth,width,test_loss,loss_std\n";
  for (int w : {200, 240, 280, 320, 360, 400}) {
    double shallow_loss = w <= 280 ? 1.0 : 1.0 + 0.05 * (w - 280) / 40.0;
    shallow << 6 << "," << w << "," << shallow_loss << ",0.01\n";
    deep << 12 << "," << w << "," << 1.0 << ",0.01\n";
  }
  write_file(dir + "/shallow.csv", shallow.str());
  write_file(dir + "/deep.csv", deep.str());

  RunResult result = run("transition --shallow-loss " + dir + "/shallow.csv" +
                         " --deep-loss " + dir + "/deep.csv");
  ASSERT_EQ(result.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  EXPECT_EQ(doc.at("depth").get<int>(), 6);
  EXPECT_DOUBLE_EQ(doc.at("width").get<double>(), 300.0);
  EXPECT_DOUBLE_EQ(doc.at("width_err").get<double>(), 40.0);
}

TEST(Cli, PlanLargestBudget) {
  RunResult result = run("plan --params 175e9");
  ASSERT_EQ(result.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  EXPECT_EQ(doc.at("depth_opt").get<int>(), 81);
  EXPECT_NEAR(doc.at("depth_raw").get<double>(), 80.511, 5e-3);
  double expected_n = 12.0 * 81.0 * std::exp(2.0 * 5.039 + 2.0 * 5.55e-2 * 81.0);
  EXPECT_NEAR(doc.at("n_transition").get<double>(), expected_n, 1.0);
}

TEST(Cli, AuditVerdicts) {
  RunResult deep = run("audit --depth 96 --width 12288");
  ASSERT_EQ(deep.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(deep.output);
  EXPECT_EQ(doc.at("verdict").get<std::string>(), "TooDeep");
  EXPECT_NEAR(doc.at("margin").get<double>(), 0.14938280759780886, 1e-9);

  RunResult shallow = run("audit --depth 12 --width 768");
  nlohmann::json doc2 = nlohmann::json::parse(shallow.output);
  EXPECT_EQ(doc2.at("verdict").get<std::string>(), "TooShallow");
}

TEST(Cli, TableFormats) {
  RunResult text = run("table1");
  ASSERT_EQ(text.exit_code, 0);
  EXPECT_NE(text.output.find("GPT-3 175B"), std::string::npos);
  EXPECT_NE(text.output.find("TooDeep"), std::string::npos);

  RunResult csv = run("table1 --format csv");
  ASSERT_EQ(csv.exit_code, 0);
  EXPECT_EQ(csv.output.rfind("name,params,trained_depth,trained_width,", 0), 0u);

  RunResult json = run("table1 --format json");
  ASSERT_EQ(json.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(json.output);
  ASSERT_TRUE(doc.is_array());
  EXPECT_EQ(doc.size(), 9u);
}

TEST(Cli, CurveFormats) {
  RunResult csv = run("curve --lmin 96 --lmax 100");
  ASSERT_EQ(csv.exit_code, 0);
  EXPECT_EQ(csv.output.rfind("L,N,dN\n", 0), 0u);

  RunResult json = run("curve --lmin 96 --lmax 100 --format json");
  nlohmann::json doc = nlohmann::json::parse(json.output);
  ASSERT_EQ(doc.size(), 5u);
  EXPECT_EQ(doc[0].at("L").get<int>(), 96);
  EXPECT_NEAR(doc[4].at("N").get<double>(), 1890905320324.095, 1e-3);
}

TEST(Cli, LabSubcommands) {
  RunResult hadamard = run("lab hadamard --dim 3 --lambda 3");
  ASSERT_EQ(hadamard.exit_code, 0);
  nlohmann::json doc = nlohmann::json::parse(hadamard.output);
  EXPECT_EQ(doc.at("expected_rank").get<int>(), 10);
  EXPECT_EQ(doc.at("measured_rank").get<int>(), 10);
  EXPECT_TRUE(doc.at("pass").get<bool>());

  RunResult assignment =
      run("lab assignment --depth 3 --width 5 --heads 1 --seq-len 4");
  ASSERT_EQ(assignment.exit_code, 0);
  nlohmann::json doc2 = nlohmann::json::parse(assignment.output);
  EXPECT_EQ(doc2.at("measured_rank").get<int>(), 4);
  EXPECT_TRUE(doc2.at("pass").get<bool>());
  EXPECT_NEAR(doc2.at("constant")[0].get<double>(), 8192.0, 1e-6);
  EXPECT_LE(doc2.at("max_rel_deviation").get<double>(), 1e-8);

  RunResult grid =
      run("lab grid-rank --depth 3 --width 5 --heads 1 --seq-len 4 --seed 3");
  ASSERT_EQ(grid.exit_code, 0);
  nlohmann::json doc3 = nlohmann::json::parse(grid.output);
  EXPECT_GE(doc3.at("measured_rank").get<int>(), 4);
}

TEST(Cli, DataDirOverride) {
  std::string dir = make_temp_dir();
  write_file(dir + "/transitions_scaling.csv",
             "depth,width,width_err\n6,214,6\n12,308,12\n18,436,20\n24,572,12\n"
             "30,824,16\n36,1200,30\n");
  std::string env = "ALLOCATRON_DATA_DIR=" + dir + " ";
  std::string command = env + std::string(ALLOCATRON_CLI_PATH) + " fit 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string output;
  char buffer[4096];
  std::size_t got = 0;
  while ((got = fread(buffer, 1, sizeof(buffer), pipe)) > 0) output.append(buffer, got);
  int status = pclose(pipe);
  ASSERT_EQ(WEXITSTATUS(status), 0);
  nlohmann::json doc = nlohmann::json::parse(output);
  EXPECT_EQ(doc.at("dof").get<int>(), 4);
}

TEST(Cli, OutFileMatchesStdout) {
  std::string dir = make_temp_dir();
  std::string path = dir + "/bounds.json";
  RunResult result = run("bounds --depth 2 --width 81 --heads 1 --out " + path);
  ASSERT_EQ(result.exit_code, 0);
  EXPECT_EQ(read_file(path), result.output);
}
