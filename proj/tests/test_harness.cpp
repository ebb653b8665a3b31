#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bergman_lab/harness/acceptance.hpp"

using namespace bergman_lab;
using namespace bergman_lab::harness;

namespace {

std::string error_message(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("bergman_lab_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(Config, DefaultsAreMaterialized) {
  const auto c = parse_config_string("# empty\n\n");
  const auto j = to_json(c);
  EXPECT_EQ(j.size(), 17u);
  EXPECT_EQ(j["samples"], 200);
  EXPECT_EQ(j["preset"], "fs+logpole(0,0.3)");
  EXPECT_EQ(j["p_ladder"], nlohmann::json({8, 16, 32}));
}

TEST(Config, ParsesTypedValues) {
  const auto c = parse_config_string(
      "space = product\npreset = fs+jointpole(0,0,0.5)\np_ladder = 4, 6, 8  # ladder\nsamples = 40\n"
      "seed = 7\ncluster_tol = 1e-3\nbattery = toric_moment\ncriteria = 3\n");
  EXPECT_EQ(c.space, "product");
  EXPECT_EQ(c.p_ladder, (std::vector<int>{4, 6, 8}));
  EXPECT_EQ(c.samples, 40);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_DOUBLE_EQ(c.cluster_tol, 1e-3);
  EXPECT_TRUE(c.runs_criterion(3));
  EXPECT_FALSE(c.runs_criterion(4));
}

TEST(Config, MalformedConfigNamesTheKey) {
  EXPECT_NE(error_message("bogus_key = 1\n").find("bogus_key"), std::string::npos);
  EXPECT_NE(error_message("samples = many\n").find("samples"), std::string::npos);
  EXPECT_NE(error_message("quad_tol = 1e-9x\n").find("quad_tol"), std::string::npos);
  EXPECT_NE(error_message("space = torus\n").find("space"), std::string::npos);
  EXPECT_NE(error_message("p_ladder = 16,8\n").find("p_ladder"), std::string::npos);
  EXPECT_NE(error_message("criteria = 10\n").find("criteria"), std::string::npos);
  EXPECT_NE(error_message("just text\n").find("line 1"), std::string::npos);
}

TEST(Config, SmallSampleCountIsAPreconditionError) {
  EXPECT_NE(error_message("samples = 10\n").find("N ≥ 30"), std::string::npos);
  ExperimentConfig c;
  c.samples = 10;
  EXPECT_THROW(run_verify(c), ConfigError);
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig c;
  c.preset = "fs+cone(0,0.5,0.05)";
  c.p_ladder = {3, 5};
  c.quad_tol = 3.3e-7;
  c.battery = {"gauss", "bump_0"};
  const auto back = parse_config_string(to_config_text(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(to_json(parse_config_string(config_text_from_json(to_json(c)))), to_json(c));
}

TEST(Harness, KernelOnPureFsIsConstant) {
  ExperimentConfig c;
  c.preset = "fs";
  c.p_ladder = {4, 8, 16};
  const auto o = run_kernel(c);
  ASSERT_EQ(o.record.units.size(), 3u);
  EXPECT_TRUE(o.record.pass);
  for (const auto& u : o.record.units) {
    const double p = u["p"].get<int>();
    EXPECT_NEAR(u["min_kernel"].get<double>(), p + 1.0, 1e-6);
    EXPECT_NEAR(u["max_kernel"].get<double>(), p + 1.0, 1e-6);
  }
}

TEST(Harness, KernelCellFailureIsRecorded) {
  ExperimentConfig c;
  c.preset = "fs+logpole(0.8,0.3)";
  c.p_ladder = {4, 32};
  const auto o = run_kernel(c);
  ASSERT_EQ(o.record.units.size(), 2u);
  EXPECT_FALSE(o.record.units[0].contains("error"));
  EXPECT_TRUE(o.record.units[1].contains("error"));
  EXPECT_FALSE(o.record.pass);
}

TEST(Harness, DimensionsMatchTheRule) {
  ExperimentConfig c;
  c.p_ladder = {5, 10, 20, 40};
  const auto o = run_dim(c);
  EXPECT_TRUE(o.record.pass);
  for (const auto& u : o.record.units) EXPECT_EQ(u["dim"], u["formula"]);
}

TEST(Harness, ConvergeFsOnPureFsIsZero) {
  ExperimentConfig c;
  c.preset = "fs";
  c.p_ladder = {4, 8};
  c.battery = {"bump_0", "gauss"};
  const auto o = run_converge(c, "fs");
  ASSERT_EQ(o.record.units.size(), 4u);
  for (const auto& u : o.record.units) EXPECT_NEAR(u["value"].get<double>(), 0.0, 1e-9);
  EXPECT_TRUE(o.record.pass);
  EXPECT_THROW(run_converge(c, "other"), ConfigError);
}

TEST(Harness, ConvergeZerosSphereRecord) {
  ExperimentConfig c;
  c.p_ladder = {8, 16};
  c.samples = 30;
  c.battery = {"gauss"};
  const auto o = run_converge_zeros(c);
  EXPECT_EQ(o.record.units.size(), 60u);
  const auto& entries = o.record.summary["functions"]["gauss"]["entries"];
  ASSERT_EQ(entries.size(), 2u);
  for (const auto& e : entries) {
    EXPECT_LE(e["q05"].get<double>(), e["q50"].get<double>());
    EXPECT_LE(e["q50"].get<double>(), e["q95"].get<double>());
  }
  EXPECT_TRUE(o.record.summary["functions"]["gauss"]["rate_fit"].is_null());
}

TEST(Harness, ConvergeZerosProductEmbedsWedgeMass) {
  ExperimentConfig c;
  c.space = "product";
  c.preset = "fs+jointpole(0,0,0.5)";
  c.p_ladder = {4, 6, 8};
  c.samples = 30;
  const auto o = run_converge_zeros(c);
  const auto& wm = o.record.summary["wedge_mass"];
  ASSERT_EQ(wm.size(), 3u);
  for (const auto& row : wm) {
    const int p = row["p"];
    EXPECT_EQ(row["expected"], 2 * p * p);
    EXPECT_EQ(row["n_ok"], 30);
  }
  EXPECT_TRUE(o.record.pass);
}

TEST(Harness, BertiniRequiresTheProduct) {
  ExperimentConfig c;
  c.p_ladder = {3};
  EXPECT_THROW(run_bertini(c), ConfigError);
  c.space = "product";
  c.preset = "fs";
  c.bertini_pairs = 40;
  const auto o = run_bertini(c);
  EXPECT_EQ(o.record.units[0]["fraction_nonzero"], 1.0);
}

TEST(Harness, LoosenedClusteringSurfacesMassFailures) {
  ExperimentConfig c;
  c.criteria = {3};
  c.samples = 30;
  const auto good = run_verify(c);
  ASSERT_EQ(good.criteria.size(), 1u);
  EXPECT_TRUE(good.criteria[0].pass) << good.criteria[0].detail;
  c.cluster_tol = 0.2;
  const auto bad = run_verify(c);
  EXPECT_FALSE(bad.criteria[0].pass);
  EXPECT_FALSE(bad.pass());
}

TEST(Harness, ReplayIsBitIdentical) {
  ExperimentConfig c;
  c.p_ladder = {8, 16};
  c.samples = 30;
  c.battery = {"gauss", "bump_1"};
  c.threads = 1;
  const auto a = run_converge_zeros(c);
  const auto b = run_converge_zeros(c);
  EXPECT_EQ(a.record.body(), b.record.body());
  c.threads = 6;
  const auto d = run_converge_zeros(c);
  auto ja = a.record.header(), jd = d.record.header();
  ja["config"].erase("threads");
  jd["config"].erase("threads");
  EXPECT_EQ(ja, jd);
  ASSERT_EQ(a.record.units.size(), d.record.units.size());
  for (size_t k = 0; k < a.record.units.size(); ++k) EXPECT_EQ(a.record.units[k].dump(), d.record.units[k].dump());
  EXPECT_EQ(a.record.summary.dump(), d.record.summary.dump());

  const auto dir = temp_dir("replay");
  write_output(a, dir.string());
  const auto back = read_record((dir / "converge-zeros.jsonl").string());
  EXPECT_EQ(back.body(), a.record.body());
  EXPECT_EQ(back.digest(), a.record.digest());
  EXPECT_TRUE(replay_matches(back));
  std::ifstream csv(dir / "converge_zeros_summary.csv");
  std::string first;
  std::getline(csv, first);
  EXPECT_EQ(first, kCsvSchema);
}

TEST(Harness, RecordRejectsForeignFiles) {
  const auto dir = temp_dir("foreign");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "x.jsonl") << "{\"schema\":\"other\"}\n";
  EXPECT_THROW(read_record((dir / "x.jsonl").string()), Error);
  EXPECT_THROW(read_record((dir / "missing.jsonl").string()), Error);
}
