#include <gtest/gtest.h>
#include <sys/wait.h>

#include <fstream>

#include "fixture.hpp"
#include "orthovar/hashing.hpp"
#include "orthovar/pipeline.hpp"
#include "test_util.hpp"

using namespace orthovar;
using namespace orthovar::pipeline;
namespace fs = std::filesystem;

namespace {

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fixture::FixtureOptions o;
    o.datapoints = 60;
    o.dim = 8;
    paths_ = fixture::write_fixture(dir_ / "fixture", o);
    o.model_id = "second";
    second_ = fixture::write_fixture_embeddings(dir_ / "fixture", o);
  }

  RunConfig config(const std::string& out) const {
    RunConfig c;
    c.dataset = paths_.dataset;
    c.confusion_table = fs::path(ORTHOVAR_DATA_DIR) / "ocr_confusions.json";
    c.embeddings = {{"synthetic", paths_.embeddings}, {"second", second_}};
    c.type_vectors = paths_.type_vectors;
    c.out = dir_ / out;
    c.k_min = 1;
    c.k_max = 4;
    c.restarts = 2;
    return c;
  }

  nlohmann::json metrics(const RunConfig& c) const {
    std::ifstream in(c.out / "metrics.json");
    return nlohmann::json::parse(in);
  }

  testutil::TempDir dir_;
  fixture::FixturePaths paths_;
  fs::path second_;
};

int exit_code(const std::string& args) {
  const int status = std::system((std::string(ORTHOVAR_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_F(PipelineTest, identical_config_gives_identical_outputs) {
  auto a = config("a"), b = config("b");
  run_pipeline(a);
  run_pipeline(b);
  EXPECT_EQ(testutil::read_file(a.out / "metrics.json"), testutil::read_file(b.out / "metrics.json"));
  for (const char* set : kSetNames) {
    const auto rel = fs::path("clusters/synthetic") / (std::string(set) + ".jsonl");
    EXPECT_EQ(testutil::read_file(a.out / rel), testutil::read_file(b.out / rel)) << set;
  }
}

TEST_F(PipelineTest, single_k_is_trivially_accurate) {
  auto c = config("k1");
  c.k_max = 1;
  run_pipeline(c);
  for (const auto& m : metrics(c).at("models")) {
    const auto& k1 = m.at("sets").at("absolute_full").at("per_k").at(0);
    EXPECT_EQ(k1.at("overall_accuracy").get<double>(), 1.0);
    EXPECT_EQ(k1.at("so_accuracy").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(m.at("sets").at("relative_full").at("per_k").at(0).at("variant_purity").get<double>(), 0.2);
  }
}

TEST_F(PipelineTest, curves_have_one_row_per_model_and_k) {
  auto c = config("curves");
  run_pipeline(c);
  std::ifstream in(c.out / "curves.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 1 + 4 * 2u);
  EXPECT_TRUE(fs::exists(c.out / "figures/overall_accuracy.svg"));
  EXPECT_TRUE(fs::exists(c.out / "tables/second/relative_obv_edits.csv"));
}

TEST_F(PipelineTest, manifest_hashes_every_output) {
  auto c = config("manifest");
  run_pipeline(c);
  std::ifstream in(c.out / "manifest.json");
  auto man = nlohmann::json::parse(in);
  ASSERT_FALSE(man.at("outputs").empty());
  for (auto& [file, hash] : man.at("outputs").items()) {
    EXPECT_EQ(sha256_file(c.out / file), hash.get<std::string>()) << file;
  }
  EXPECT_TRUE(man.at("outputs").contains("metrics.json"));
  EXPECT_TRUE(man.at("outputs").contains("clusters/synthetic/relative_full.jsonl"));
  EXPECT_EQ(man.at("config").at("seed").get<std::uint64_t>(), c.seed);
}

TEST_F(PipelineTest, rerun_reuses_cache_and_recomputes_downstream) {
  auto c = config("cache");
  auto first = run_pipeline(c);
  for (const auto& [stage, cached] : first.cached) EXPECT_FALSE(cached) << stage;
  const auto before = testutil::read_file(c.out / "metrics.json");

  auto second = run_pipeline(c);
  for (const auto& [stage, cached] : second.cached) EXPECT_TRUE(cached) << stage;
  EXPECT_EQ(testutil::read_file(c.out / "metrics.json"), before);

  c.k_max = 3;
  auto third = run_pipeline(c);
  EXPECT_TRUE(third.cached.at("validate"));
  EXPECT_TRUE(third.cached.at("build-sets/synthetic"));
  EXPECT_FALSE(third.cached.at("cluster/synthetic"));
  EXPECT_FALSE(third.cached.at("evaluate"));
}

TEST_F(PipelineTest, tampered_output_is_recomputed) {
  auto c = config("tamper");
  run_pipeline(c);
  testutil::write_file(c.out / "variants.jsonl", "");
  auto again = run_pipeline(c);
  EXPECT_FALSE(again.cached.at("mutate"));
  EXPECT_TRUE(again.cached.at("validate"));
}

TEST_F(PipelineTest, partial_run_stops_at_stage) {
  auto c = config("partial");
  auto s = run_pipeline(c, Stage::Mutate);
  EXPECT_TRUE(fs::exists(c.out / "variants.jsonl"));
  EXPECT_FALSE(fs::exists(c.out / "sets"));
  EXPECT_EQ(s.cached.size(), 2u);
}

TEST_F(PipelineTest, locked_directory_is_refused) {
  auto c = config("locked");
  fs::create_directories(c.out);
  testutil::write_file(c.out / ".lock", "1\n");
  EXPECT_THROW(run_pipeline(c), ConfigError);
}

TEST_F(PipelineTest, config_validation) {
  auto c = config("bad");
  c.k_min = 5;
  c.k_max = 2;
  EXPECT_THROW(validate_config(c), ConfigError);
  c = config("bad");
  c.dataset = dir_ / "missing.jsonl";
  EXPECT_THROW(validate_config(c), ConfigError);
  c = config("bad");
  c.exclude_kinds = {VariantKind::Obv, VariantKind::Rev, VariantKind::Ocr, VariantKind::Swp, VariantKind::Rnd};
  EXPECT_THROW(validate_config(c), ConfigError);
  c = config("bad");
  c.embeddings.push_back({"synthetic", second_});
  EXPECT_THROW(validate_config(c), ConfigError);
}

TEST_F(PipelineTest, stage_failure_names_stage) {
  auto c = config("toolarge");
  c.k_max = 1000;
  try {
    run_pipeline(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), Stage::Cluster);
  }
}

TEST_F(PipelineTest, cli_exit_codes) {
  const std::string data = " --dataset " + paths_.dataset.string() + " --embeddings m=" + paths_.embeddings.string();
  EXPECT_EQ(exit_code("run" + data + " --k-max 3 --out " + (dir_ / "cli_ok").string()), 0);
  EXPECT_EQ(exit_code("run --out " + (dir_ / "cli_missing").string()), 2);
  EXPECT_EQ(exit_code("run" + data + " --layer-agg bogus --out " + (dir_ / "cli_agg").string()), 2);
  EXPECT_EQ(exit_code("run" + data + " --k-max 900 --out " + (dir_ / "cli_k").string()), 3);
  EXPECT_EQ(exit_code("--no-such-flag"), 2);
}
