#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hyperst/experiment.hpp"

using namespace hyperst;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.shots = 20000;
  c.copies = 2000;
  c.tomo_shots = 2000;
  c.seed = 7;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hyperst_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HYPERST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, JsonRoundTripAndOverrides) {
  const auto j = ojson::parse(R"({"label":"psi-,phi+","noise":{"werner_p_pol":0.9},"copies":100,"seed":3})");
  const auto c = config_from_json(j);
  EXPECT_EQ(c.label, (HyperBellLabel{BellLabel::PsiMinus, BellLabel::PhiPlus}));
  EXPECT_EQ(c.noise.werner_p_pol, 0.9);
  EXPECT_EQ(c.copies, 100u);
  const auto again = config_from_json(to_json(c));
  EXPECT_EQ(config_hash(again), config_hash(c));
  EXPECT_THROW(config_from_json(ojson::parse(R"({"colour":1})")), UsageError);
  EXPECT_THROW(config_from_json(ojson::parse(R"({"label":"nope"})")), UsageError);
  EXPECT_THROW(config_from_json(ojson::parse(R"({"copies":"many"})")), UsageError);
  ExperimentConfig odd;
  odd.copies = 3;
  EXPECT_THROW(odd.validate(), UsageError);
}

TEST(Config, HashChangesWithSeed) {
  auto a = small_config();
  auto b = a;
  b.seed = 8;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Chsh, IdealViolatesAndIsReproducible) {
  const auto c = small_config();
  const auto a = cmd_chsh(c);
  const auto b = cmd_chsh(c);
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.report.begin().key(), "schema_version");
  const double i = a.report["dofs"]["pol"]["i_value"];
  const double se = a.report["dofs"]["pol"]["std_error"];
  EXPECT_NEAR(i, kTsirelson, 4 * se);
}

TEST(Chsh, DepolarizedSourceIsRejected) {
  auto c = small_config();
  c.noise.werner_p_pol = 0.0;
  c.noise.werner_p_spat = 0.0;
  const auto r = cmd_chsh(c);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NEAR(r.report["dofs"]["spat"]["i_value"].get<double>(), 0.0, 0.1);
}

TEST(Chsh, ShotRecordsOnlyWhenRequested) {
  auto c = small_config();
  c.shots = 10;
  EXPECT_TRUE(cmd_chsh(c).files.empty());
  c.records = true;
  const auto r = cmd_chsh(c);
  ASSERT_EQ(r.files.size(), 1u);
  std::istringstream in(r.files[0].content);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = ojson::parse(line);
    EXPECT_EQ(j.begin().key(), "dof");
    ++n;
  }
  EXPECT_EQ(n, 80);
}

TEST(Chsh, HardwareModelAgreesWithAbstract) {
  auto c = small_config();
  const auto a = cmd_chsh(c);
  c.hardware_model = true;
  const auto h = cmd_chsh(c);
  EXPECT_EQ(h.report["measurement"], "hardware");
  EXPECT_NEAR(h.report["dofs"]["pol"]["i_value"].get<double>(), a.report["dofs"]["pol"]["i_value"].get<double>(), 0.05);
}

TEST(Selftest, PsiPolarizationIsCertifiedAtFullRate) {
  auto c = small_config();
  c.label = {BellLabel::PsiPlus, BellLabel::PhiMinus};
  const auto r = cmd_selftest(c);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.report["certified_label"], "psi+,phi-");
  EXPECT_DOUBLE_EQ(r.report["step2"]["acceptance_rate"].get<double>(), 1.0);
  EXPECT_EQ(r.report["step1"]["copies"].get<int>() + r.report["step2"]["copies"].get<int>(), 2000);
}

TEST(Selftest, PhiPolarizationHalfRateWithBeamDisplacer) {
  auto c = small_config();
  c.copies = 10000;
  c.label = {BellLabel::PhiPlus, BellLabel::PsiPlus};
  const auto r = cmd_selftest(c);
  EXPECT_EQ(r.exit_code, 0);
  const double rate = r.report["step2"]["acceptance_rate"];
  EXPECT_NEAR(rate, 0.5, 3 * std::sqrt(0.25 / 5000));
  EXPECT_GT(r.report["step2"]["chi_square"]["p_value"].get<double>(), 1e-4);
}

TEST(Selftest, WrongClaimIsRejected) {
  auto c = small_config();
  c.label = {BellLabel::PhiPlus, BellLabel::PhiPlus};
  c.source_label = HyperBellLabel{BellLabel::PhiMinus, BellLabel::PhiPlus};
  const auto r = cmd_selftest(c);
  EXPECT_EQ(r.report["step2"]["acceptance_rate"].get<double>(), 0.0);
  EXPECT_EQ(r.report["certified_label"], "phi-,phi+");
  EXPECT_EQ(r.exit_code, 1);
}

TEST(Selftest, RecordsOnePerCopy) {
  auto c = small_config();
  c.copies = 100;
  const auto r = cmd_selftest(c);
  ASSERT_EQ(r.files.size(), 1u);
  EXPECT_EQ(std::count(r.files[0].content.begin(), r.files[0].content.end(), '\n'), 100);
}

TEST(ChiSquare, PValue) {
  std::vector<BranchStat> s = {{"a", true, 0.5, 50}, {"b", false, 0.5, 50}};
  auto r = chi_square(s, 100);
  EXPECT_NEAR(r.statistic, 0.0, 1e-15);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
  s[0].count = 70;
  s[1].count = 30;
  r = chi_square(s, 100);
  EXPECT_NEAR(r.statistic, 16.0, 1e-12);
  EXPECT_NEAR(r.p_value, 6.334e-5, 1e-7);
}

TEST(Bounds, FlagsAnchorAndSweep) {
  BoundsInput in;
  in.epsilon_p = 2.40e-4;
  in.epsilon_s = 2.40e-4;
  const auto r = cmd_bounds(small_config(), in);
  EXPECT_NEAR(r.report["bound"]["f_p_lb"].get<double>(), 0.5, 0.01);
  EXPECT_NEAR(r.report["bound"]["f_t_lb"].get<double>(), 0.25, 0.01);
  ASSERT_EQ(r.files.size(), 1u);
  EXPECT_EQ(r.files[0].content.substr(0, 22), "epsilon,f_p_lb,f_t_lb\n");
}

TEST(Bounds, NegativeEpsilonIsClampedWithWarning) {
  BoundsInput in;
  in.epsilon_p = -0.01;
  in.epsilon_s = 0.0;
  std::vector<std::string> w;
  const auto r = cmd_bounds(small_config(), in, &w);
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(r.report["epsilon_p"].get<double>(), 0.0);
  in.epsilon_s.reset();
  EXPECT_THROW(cmd_bounds(small_config(), in), UsageError);
}

TEST(Bounds, FromChshReport) {
  const auto chsh = cmd_chsh(small_config());
  BoundsInput in;
  in.chsh_report = chsh.report;
  const auto r = cmd_bounds(small_config(), in);
  EXPECT_EQ(r.report["epsilon_source"], "chsh_report");
}

TEST(Sweep, Parse) {
  const auto s = parse_sweep("1e-7:1e-3:100");
  EXPECT_EQ(s.points, 100u);
  EXPECT_EQ(s.lo, 1e-7);
  EXPECT_THROW(parse_sweep("1:2"), UsageError);
  EXPECT_THROW(parse_sweep("a:b:c"), UsageError);
  EXPECT_THROW(parse_sweep("2:1:5"), UsageError);
  EXPECT_THROW(parse_sweep("0:1:0"), UsageError);
}

TEST(Certify, IdealPassesAndIsReproducible) {
  const auto c = small_config();
  const auto a = cmd_certify(c);
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.report["verdict"], "PASS");
  EXPECT_EQ(a.report.dump(), cmd_certify(c).report.dump());
}

TEST(Certify, MildWernerPasses) {
  auto c = small_config();
  c.noise.werner_p_pol = c.noise.werner_p_spat = 0.9999;
  EXPECT_EQ(cmd_certify(c).report["verdict"], "PASS");
}

TEST(Tomo, ReportsFidelities) {
  const auto r = cmd_tomo(small_config());
  EXPECT_GT(r.report["fidelities"]["f_full"].get<double>(), 0.9);
  EXPECT_EQ(r.report["rho_hat"]["real"].size(), 16u);
}

TEST(Writing, AtomicWriteLeavesNoTemporaries) {
  const auto d = temp_dir("atomic");
  write_result(cmd_tomo(small_config()), d);
  EXPECT_TRUE(fs::exists(d / "tomo.json"));
  EXPECT_TRUE(fs::exists(d / "tomo_counts.jsonl"));
  for (const auto& e : fs::directory_iterator(d)) EXPECT_NE(e.path().extension(), ".tmp");
  const auto first = ojson::parse(slurp(d / "tomo_counts.jsonl").substr(0, slurp(d / "tomo_counts.jsonl").find('\n')));
  EXPECT_EQ(first.begin().key(), "setting");
}

TEST(Cli, ExitCodes) {
  const auto d = temp_dir("cli");
  const std::string out = " --out " + d.string();
  EXPECT_EQ(run_cli("chsh --shots 2000 --seed 1" + out), 0);
  EXPECT_TRUE(fs::exists(d / "chsh.json"));
  EXPECT_EQ(run_cli("bounds --epsilon-p 2.4e-4 --epsilon-s 2.4e-4 --sweep 1e-7:1e-3:50" + out), 0);
  EXPECT_EQ(std::count(std::istreambuf_iterator<char>(std::ifstream(d / "sweep.csv").rdbuf()), {}, '\n'), 51);
  EXPECT_EQ(run_cli("bounds --chsh-report " + (d / "chsh.json").string() + out), 0);
  EXPECT_EQ(run_cli("selftest --copies 3" + out), 2);
  EXPECT_EQ(run_cli("chsh --label phi+" + out), 2);
  EXPECT_EQ(run_cli("nonsense"), 2);
  EXPECT_EQ(run_cli("chsh --config /does/not/exist" + out), 2);
  EXPECT_EQ(run_cli("bounds --sweep 1:2" + out), 2);

  std::ofstream(d / "noisy.json") << R"({"noise": {"werner_p_pol": 0.0, "werner_p_spat": 0.0}})";
  EXPECT_EQ(run_cli("chsh --shots 2000 --config " + (d / "noisy.json").string() + out), 1);
  std::ofstream(d / "bad.json") << "{ not json";
  EXPECT_EQ(run_cli("chsh --config " + (d / "bad.json").string() + out), 2);
}

TEST(Cli, SameSeedGivesByteIdenticalReports) {
  const auto a = temp_dir("seed_a");
  const auto b = temp_dir("seed_b");
  ASSERT_EQ(run_cli("chsh --shots 5000 --seed 11 --label psi-,phi+ --out " + a.string()), 0);
  ASSERT_EQ(run_cli("chsh --shots 5000 --seed 11 --label psi-,phi+ --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "chsh.json"), slurp(b / "chsh.json"));
}
