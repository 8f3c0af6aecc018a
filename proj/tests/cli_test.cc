/*!
 *  Copyright (c) 2026 by Contributors
 * \file cli_test.cc
 */
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gramdash/vocab.h"

namespace gramdash {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gramdash_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path Write(const std::string& name, const std::string& content) {
    fs::path p = dir_ / name;
    std::ofstream(p) << content;
    return p;
  }

  Result Run(const std::string& args) {
    const fs::path out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd = std::string("\"") + GRAMDASH_CLI_PATH + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, Slurp(out), Slurp(err)};
  }

  fs::path dir_;
};

TEST_F(CliTest, CompileAotPrecompilesEveryKey) {
  auto g = Write("g.ebnf", "root ::= \"[\" item (\",\" item)* \"]\"\nitem ::= [0-9]+ | \"true\"\n");
  Result aot = Run("compile " + g.string() + " --aot --json");
  ASSERT_EQ(aot.code, 0) << aot.err;
  Json j = Json::parse(aot.out);
  EXPECT_GT(j["scannable_keys"].get<int>(), 0);
  EXPECT_EQ(j["precompiled_entries"], j["scannable_keys"]);
  Result jit = Run("compile " + g.string() + " --jit 0 --json");
  ASSERT_EQ(jit.code, 0) << jit.err;
  EXPECT_EQ(Json::parse(jit.out)["precompiled_entries"], 0);
}

TEST_F(CliTest, CompileRepThresholdBoundsStates) {
  auto g = Write("g.ebnf", "root ::= \"x\"{0,500}\n");
  Result compressed = Run("compile " + g.string() + " --rep-threshold 8 --json");
  ASSERT_EQ(compressed.code, 0) << compressed.err;
  Result expanded = Run("compile " + g.string() + " --no-compress --json");
  ASSERT_EQ(expanded.code, 0) << expanded.err;
  EXPECT_LE(Json::parse(compressed.out)["fsm_states"].get<int>(), 3 * 8 + 4);
  EXPECT_GE(Json::parse(expanded.out)["fsm_states"].get<int>(), 500);
}

TEST_F(CliTest, CompileWritesBundle) {
  auto g = Write("g.ebnf", "root ::= \"ab\" | \"cd\"\n");
  const fs::path bundle = dir_ / "out.json";
  Result r = Run("compile " + g.string() + " --aot --out " + bundle.string());
  ASSERT_EQ(r.code, 0) << r.err;
  Json b = Json::parse(Slurp(bundle));
  EXPECT_EQ(b["format"], "gramdash-bundle");
  EXPECT_EQ(b["vocab_size"], 500);
  EXPECT_EQ(b["entries"].size(), b["stats"]["scannable_keys"].get<size_t>());
}

TEST_F(CliTest, ReplayAcceptsValidTrace) {
  Vocabulary v = SyntheticVocab(500, 7);
  auto id = [&](const std::string& s) {
    return std::find(v.tokens().begin(), v.tokens().end(), s) - v.tokens().begin();
  };
  auto g = Write("g.ebnf", "root ::= \"abc\"\n");
  std::string trace;
  int step = 0;
  for (auto t : {id("a"), id("b"), id("c"), static_cast<ptrdiff_t>(v.eos_id())}) {
    trace += "{\"step\":" + std::to_string(step++) + ",\"token_id\":" + std::to_string(t) + "}\n";
  }
  Result ok = Run("replay " + g.string() + " " + Write("ok.jsonl", trace).string());
  ASSERT_EQ(ok.code, 0) << ok.err;
  std::istringstream lines(ok.out);
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) EXPECT_TRUE(Json::parse(line)["accepted"]);
  EXPECT_EQ(n, 4);

  const std::string bad = "{\"step\":0,\"token_id\":" + std::to_string(id("a")) +
                          "}\n{\"step\":1,\"token_id\":" + std::to_string(id("c")) + "}\n";
  Result rejected = Run("replay " + g.string() + " " + Write("bad.jsonl", bad).string());
  EXPECT_NE(rejected.code, 0);
  EXPECT_NE(rejected.err.find("step 1"), std::string::npos) << rejected.err;
}

TEST_F(CliTest, MaskReportsAllowedTokens) {
  auto g = Write("g.ebnf", "root ::= [a-z]+\n");
  Result r = Run("mask " + g.string() + " --prefix ab --json");
  ASSERT_EQ(r.code, 0) << r.err;
  Json j = Json::parse(r.out);
  EXPECT_GE(j["allowed_count"].get<int>(), 1);
  EXPECT_EQ(j["mask"].get<std::string>().size(), 500u / 8 * 2 + 2);
  Result bad = Run("mask " + g.string() + " --prefix 9");
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliTest, OracleDiffAgrees) {
  auto g = Write("g.ebnf", "root ::= \"{\" (pair (\",\" pair)*)? \"}\"\npair ::= [a-c]+ \":\" [0-9]{1,3}\n");
  Result r = Run("oracle-diff " + g.string() + " --steps 30 --traces 3 --json");
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  EXPECT_TRUE(Json::parse(r.out)["agreed"]);
}

TEST_F(CliTest, AcStats) {
  Result r = Run("ac-stats " + Write("tags.txt", "ab\n").string() + " --json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out)["ac_states"], 3);
  Result gen = Run("ac-stats --generate 100 --seed 1 --json");
  ASSERT_EQ(gen.code, 0) << gen.err;
  EXPECT_GE(Json::parse(gen.out)["total_length"].get<int>(), 100);
}

TEST_F(CliTest, BenchSingleRequestHasNoReuse) {
  Result r = Run("bench --pool 10 --tools 3 --requests 1 --decode-steps 4 --warmups 0 --reps 1 --json");
  ASSERT_EQ(r.code, 0) << r.err;
  Json j = Json::parse(r.out);
  EXPECT_EQ(j["structure_reuse_rate"], 0.0);
  EXPECT_EQ(j["substructure_reuse_rate"], 0.0);
}

TEST_F(CliTest, GenVocabRoundTrips) {
  const fs::path out = dir_ / "v.tsv";
  ASSERT_EQ(Run("gen-vocab --size 64 --seed 3 --out " + out.string()).code, 0);
  EXPECT_EQ(LoadVocab(out.string(), VocabFormat::kTsv), SyntheticVocab(64, 3));
}

TEST_F(CliTest, ModuleErrorsExitTwo) {
  EXPECT_EQ(Run("compile " + Write("bad.ebnf", "root ::= missing\n").string()).code, 2);
  EXPECT_EQ(Run("compile " + (dir_ / "absent.ebnf").string()).code, 2);
  EXPECT_EQ(Run("bench --pool 3 --tools 5 --requests 1").code, 2);
  EXPECT_EQ(Run("ac-stats " + Write("empty.txt", "").string()).code, 2);
}

}  // namespace
}  // namespace gramdash
