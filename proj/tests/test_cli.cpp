#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "kimura/io.hpp"
#include "kimura/reducer.hpp"

using namespace kimura;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr discarded and returns exit status and stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string(KIMURA_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  for (std::size_t k; (k = fread(buf.data(), 1, buf.size(), p)) > 0;) r.out.append(buf.data(), k);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("kimura_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = (dir / name).string();
    std::ofstream(p) << text;
    return p;
  }
  json read(const std::string& name) { return read_json_file((dir / name).string()); }
  std::string path(const std::string& name) { return (dir / name).string(); }

  fs::path dir;
};

}  // namespace

TEST(Io, TableForms) {
  const auto a = table_from_json(json::parse(R"(["0aa0","a00a"])"));
  const auto b = table_from_json(json::parse(R"({"rows":["a00a","0aa0"]})"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(table_from_json(table_to_json(a)), a);
  EXPECT_THROW(table_from_json(json::parse(R"(["0ab"])")), std::invalid_argument);
  EXPECT_THROW(table_from_json(json::parse(R"({"cols":[]})")), std::invalid_argument);
  EXPECT_THROW(table_from_json(json::parse(R"([1,2])")), std::invalid_argument);
  EXPECT_THROW(pair_from_json(json::parse(R"({"t0":["0aa0"],"t1":["aa0"]})")), std::invalid_argument);
}

TEST(Io, TraceRoundTrip) {
  std::mt19937_64 rng(5);
  auto [t0, t1] = random_compatible_pair(rng, 7, 6);
  const auto r = reduce_pair(t0, t1);
  ASSERT_TRUE(r.success);
  std::stringstream ss;
  write_trace_jsonl(ss, r.trace);
  const auto back = read_trace_jsonl(ss);
  ASSERT_EQ(back.size(), r.trace.size());
  EXPECT_EQ(back.max_degree, r.trace.max_degree);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.steps[i].side, r.trace.steps[i].side);
    EXPECT_EQ(back.steps[i].move.removed(), r.trace.steps[i].move.removed());
    EXPECT_EQ(back.steps[i].move.inserted(), r.trace.steps[i].move.inserted());
  }
  EXPECT_TRUE(verify_trace(t0, t1, back, kMoveBound));
}

TEST(Io, MalformedTraceLineNamed) {
  std::stringstream ss(R"({"side":"T0","remove":["a0a0"],"insert":["a0a0"]})"
                       "\n");
  try {
    read_trace_jsonl(ss);
    FAIL() << "trivial move accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(Io, ReplacementCacheSaveLoad) {
  ReplacementCache a;
  const auto t = Table::parse({"0aa0", "a00a", "bb00"});
  for (auto& nb : neighbors(t, 3, a)) (void)nb;
  ASSERT_GT(a.size(), 0u);
  std::stringstream ss;
  a.save(ss);
  ReplacementCache b;
  b.load(ss);
  EXPECT_EQ(b.size(), a.size());
  std::stringstream s2;
  b.save(s2);
  std::stringstream s1;
  a.save(s1);
  EXPECT_EQ(s1.str(), s2.str());
}

TEST_F(CliTest, FlowsCountOnly) {
  const auto r = cli("flows --leaves 6 --count-only");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "1024\n");
  EXPECT_EQ(cli("flows --leaves 6 --face 5:c,6:c --count-only").out, "576\n");
}

TEST_F(CliTest, FlowsReport) {
  ASSERT_EQ(cli("flows --leaves 3 -o " + path("f.json")).status, 0);
  const auto j = read("f.json");
  EXPECT_EQ(j["tool"], "kimura");
  EXPECT_EQ(j["subcommand"], "flows");
  EXPECT_EQ(j["config"]["leaves"], 3);
  EXPECT_EQ(j["result"]["count"], 16);
  EXPECT_EQ(j["result"]["flows"].size(), 16u);
}

TEST_F(CliTest, VerifyMoves) {
  ASSERT_EQ(cli("verify-moves -o " + path("v.json")).status, 0);
  const auto j = read("v.json");
  EXPECT_GE(j["result"]["identities"].get<int>(), 25);
  EXPECT_EQ(j["result"]["passed"], j["result"]["identities"]);
}

TEST_F(CliTest, VerifyMovesRejectsBadCorpus) {
  const auto c = write("bad.jsonl", R"({"ref":"x","lhs":["0a0a","0b0b"],"rhs":["0a0a","0c0c"]})"
                                    "\n");
  EXPECT_EQ(cli("verify-moves --corpus " + c).status, 1);
}

TEST_F(CliTest, ReduceSelfPairGivesEmptyTrace) {
  const auto in = write("self.json", R"({"t0":["a0a0","0bb0"],"t1":["0bb0","a0a0"]})");
  const auto r = cli("reduce --input " + in);
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j["result"]["success"].get<bool>());
  EXPECT_EQ(j["result"]["steps"], 0);
  EXPECT_TRUE(j["result"]["trace"].empty());
}

TEST_F(CliTest, ReduceWritesTraceThatVerifies) {
  std::mt19937_64 rng(11);
  auto [t0, t1] = random_compatible_pair(rng, 7, 6);
  const auto in = write("pair.json", pair_to_json(t0, t1).dump());
  ASSERT_EQ(cli("reduce --input " + in + " --trace " + path("t.jsonl") + " -o " + path("r.json")).status, 0);
  const auto j = read("r.json");
  EXPECT_TRUE(j["result"]["validated"].get<bool>());
  EXPECT_LE(j["result"]["max_move_degree"].get<int>(), 4);

  // replay independently, in process and through the CLI
  std::ifstream tin(path("t.jsonl"));
  const auto trace = read_trace_jsonl(tin);
  EXPECT_EQ(trace.size(), j["result"]["steps"].get<std::size_t>());
  EXPECT_TRUE(verify_trace(t0, t1, trace, kMoveBound));
  EXPECT_EQ(cli("reduce --input " + in + " --verify-trace " + path("t.jsonl") + " -o " + path("v.json")).status, 0);
  EXPECT_TRUE(read("v.json")["result"]["valid"].get<bool>());
}

TEST_F(CliTest, VerifyTraceRejectsWrongTrace) {
  const auto in = write("pair.json", R"({"t0":["a0a0","0a0a"],"t1":["a00a","0aa0"]})");
  // legal move, but the tables do not end equal
  const auto tr = write("t.jsonl", R"({"side":"T1","remove":["0aa0","a00a"],"insert":["0a0a","a0a0"]})"
                                   "\n"
                                   R"({"side":"T0","remove":["0a0a","a0a0"],"insert":["0aa0","a00a"]})"
                                   "\n");
  EXPECT_EQ(cli("reduce --input " + in + " --verify-trace " + tr).status, 1);
  const auto ok = write("ok.jsonl", R"({"side":"T1","remove":["0aa0","a00a"],"insert":["0a0a","a0a0"]})"
                                    "\n");
  EXPECT_EQ(cli("reduce --input " + in + " --verify-trace " + ok + " -o " + path("v.json")).status, 0);
  // degree bound applies to supplied traces
  EXPECT_EQ(cli("reduce --input " + in + " --verify-trace " + ok + " --max-degree 1").status, 1);
}

TEST_F(CliTest, InvalidInputExitsOne) {
  EXPECT_EQ(cli("").status, 1);
  EXPECT_EQ(cli("nonsense").status, 1);
  EXPECT_EQ(cli("flows").status, 1);
  EXPECT_EQ(cli("flows --leaves 3 --face 9:c").status, 1);
  EXPECT_EQ(cli("flows --leaves 3 --face 2:0").status, 1);
  EXPECT_EQ(cli("reduce --input " + path("missing.json")).status, 1);
  EXPECT_EQ(cli("reduce --input " + write("bad.json", "{not json")).status, 1);
  EXPECT_EQ(cli("reduce --input " + write("inc.json", R"({"t0":["a0a0"],"t1":["0a0a"]})")).status, 1);
  EXPECT_EQ(cli("reduce --input " + write("nf.json", R"({"t0":["aaa0"],"t1":["aaa0"]})")).status, 1);
  EXPECT_EQ(cli("census --leaves 3 --max-degree 1").status, 1);
  EXPECT_EQ(cli("series --numerator-file " + write("s.json", R"({"numerator":[1],"denom_exp":-1})")).status, 1);
}

TEST_F(CliTest, BudgetExhaustionExitsTwo) {
  ReduceBudget b;
  b.stage_nodes = 0;
  b.max_nodes = 0;
  b.merge_depth = 0;
  std::mt19937_64 rng(32);
  for (int i = 0; i < 50; ++i) {
    auto [t0, t1] = random_compatible_pair(rng, 7, 6);
    if (reduce_pair(t0, t1, b).success) continue;
    const auto in = write("hard.json", pair_to_json(t0, t1).dump());
    EXPECT_EQ(cli("reduce --input " + in + " --budget 0 --stage-budget 0 --merge-depth 0 -o " + path("r.json")).status,
              2);
    EXPECT_FALSE(read("r.json")["result"]["success"].get<bool>());
    // the same pair with default budgets succeeds
    EXPECT_EQ(cli("reduce --input " + in + " -o " + path("r.json")).status, 0);
    break;
  }
  EXPECT_EQ(cli("hilbert --leaves 5 --max-dilation 2 --max-layer 10").status, 2);
}

TEST_F(CliTest, SeriesExpansion) {
  const auto f = write("n.json", R"({"numerator":[1,1],"denom_exp":2})");
  const auto r = cli("series --numerator-file " + f + " --expand 3");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  // (1+t)/(1-t)^2 = 1 + 3t + 5t^2 + 7t^3
  EXPECT_EQ(j["result"]["coefficients"], json::parse(R"(["1","3","5","7"])"));
  EXPECT_EQ(j["result"]["regularity_bound"], 2);
}

TEST_F(CliTest, HilbertRecord) {
  ASSERT_EQ(cli("hilbert --leaves 3 --max-dilation 12 --threads 2 -o " + path("h.json")).status, 0);
  const auto j = read("h.json")["result"];
  EXPECT_EQ(j["values"][1], "16");
  EXPECT_TRUE(j.contains("h"));
  EXPECT_TRUE(j.contains("a_invariant"));
  EXPECT_TRUE(j.contains("regularity_bound"));
  EXPECT_TRUE(j["reciprocity_zeros"].get<bool>());
}

TEST_F(CliTest, CensusAndConnectivityReports) {
  ASSERT_EQ(cli("census --leaves 4 --max-degree 3 --shards 4 --threads 2 -o " + path("c.json")).status, 0);
  const auto c = read("c.json");
  ASSERT_EQ(c["result"]["degrees"].size(), 2u);
  for (auto& d : c["result"]["degrees"])
    for (auto key : {"degree", "generators", "fibers", "elapsed_s"}) EXPECT_TRUE(d.contains(key)) << key;

  ASSERT_EQ(cli("connectivity --leaves 3 --max-table-degree 6 --move-degree 4 -o " + path("k.json")).status, 0);
  EXPECT_TRUE(read("k.json")["result"]["connected"].get<bool>());
  // moves of degree 2 do not suffice for three leaves
  ASSERT_EQ(cli("connectivity --leaves 3 --max-table-degree 3 --move-degree 2 -o " + path("k2.json")).status, 0);
  const auto k2 = read("k2.json")["result"];
  EXPECT_FALSE(k2["connected"].get<bool>());
  EXPECT_TRUE(k2["witness"]["validated"].get<bool>());
}

TEST_F(CliTest, CacheDirIsUsed) {
  const auto cache = path("cache");
  ASSERT_EQ(cli("connectivity --leaves 3 --max-table-degree 3 --move-degree 2 -o " + path("a.json")).status, 0);
  const std::string env = "KIMURA_CACHE_DIR=" + cache + " ";
  const std::string cmd = env + KIMURA_CLI_PATH + " connectivity --leaves 3 --max-table-degree 3 --move-degree 2 -o " +
                          path("b.json") + " 2>/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  ASSERT_EQ(std::system(cmd.c_str()), 0);  // second run loads the spilled cache
  EXPECT_FALSE(fs::is_empty(cache));
  auto a = read("a.json")["result"], b = read("b.json")["result"];
  for (auto* j : {&a, &b})
    for (auto& d : (*j)["degrees"]) d.erase("elapsed_s");
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, FuzzIsReproducibleAcrossThreadCounts) {
  ASSERT_EQ(cli("fuzz --leaves 6 --degree 5 --count 30 --seed 9 --threads 1 -o " + path("a.json")).status, 0);
  ASSERT_EQ(cli("fuzz --leaves 6 --degree 5 --count 30 --seed 9 --threads 3 -o " + path("b.json")).status, 0);
  auto a = read("a.json"), b = read("b.json");
  EXPECT_TRUE(a["result"]["all_passed"].get<bool>());
  EXPECT_EQ(a["config"]["seed"], 9);
  for (auto* j : {&a, &b}) {
    (*j)["result"].erase("elapsed_s");
    (*j)["config"].erase("threads");
    (*j)["config"].erase("out");
  }
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, ConfigReplayReproducesReport) {
  ASSERT_EQ(cli("census --leaves 4 --max-degree 3 --face 4:c -o " + path("c.json")).status, 0);
  auto first = read("c.json");
  ASSERT_EQ(cli("--config " + path("c.json")).status, 0);
  auto second = read("c.json");
  auto strip = [](json& j) {
    for (auto& d : j["result"]["degrees"]) d.erase("elapsed_s");
  };
  strip(first);
  strip(second);
  EXPECT_EQ(first, second);
  EXPECT_EQ(cli("--config " + write("x.json", "{}")).status, 1);
}
