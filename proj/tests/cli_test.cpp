#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cotsel/cli.hpp"
#include "json.hpp"
#include "support/mock_endpoint.hpp"
#include "support/temp_dir.hpp"

namespace cotsel::cli {
namespace {

using cotsel::testing::MockEndpoint;
using cotsel::testing::read_file;
using cotsel::testing::TempDir;
using json = nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Record i has a trace of 3 * (i + 1) words and boxes its own index.
std::string pool_text(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    std::string think;
    for (std::size_t w = 0; w < 3 * (i + 1); ++w) think += w % 7 == 6 ? "Wait, " : "step ";
    json j{{"id", "r" + std::to_string(1000 + i)},
           {"question", "Question number " + std::to_string(i)},
           {"response", "<think>" + think + "</think>\\boxed{" + std::to_string(i) + "}"},
           {"gold_answer", std::to_string(i)},
           {"category", i % 2 ? "odd" : "even"}};
    s += j.dump() + "\n";
  }
  return s;
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::string field(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "\t", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

class CliTest : public ::testing::Test {
 protected:
  std::string out_dir() const { return dir_.path("out"); }
  std::string out_file(const std::string& name) const { return out_dir() + "/" + name; }

  std::vector<std::string> base(const std::string& cmd, const std::string& pool) const {
    return {cmd, "--pool", pool, "--out", out_dir(), "--cache", dir_.path("cache.jsonl"),
            "--log-level", "quiet"};
  }

  static std::vector<std::string> with(std::vector<std::string> a,
                                       const std::vector<std::string>& more) {
    a.insert(a.end(), more.begin(), more.end());
    return a;
  }

  TempDir dir_;
};

TEST_F(CliTest, IngestValidPool) {
  const auto pool = dir_.write("pool.jsonl", pool_text(20));
  const auto r = run_cli(base("ingest", pool));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "written"), "20");
  EXPECT_EQ(line_count(read_file(out_file("pool.jsonl"))), 20u);
  EXPECT_EQ(json::parse(read_file(out_file("ingest_stats.json")))["with_trace"], 20);
}

TEST_F(CliTest, IngestMissingFileNamesPath) {
  const auto missing = dir_.path("nope.jsonl");
  const auto r = run_cli(base("ingest", missing));
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find(missing), std::string::npos);
}

TEST_F(CliTest, IngestSkipsMalformedLines) {
  auto text = pool_text(99);
  text.insert(text.find('\n') + 1, "{not json\n");
  const auto r = run_cli(base("ingest", dir_.write("pool.jsonl", text)));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "skipped_lines"), "1");
  EXPECT_EQ(field(r.out, "written"), "99");
}

TEST_F(CliTest, IngestDedupesById) {
  const auto text = pool_text(5);
  const auto r = run_cli(base("ingest", dir_.write("pool.jsonl", text + text)));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "written"), "5");
  const auto none = run_cli(with(base("ingest", dir_.path("pool.jsonl")), {"--dedupe", "none"}));
  EXPECT_EQ(field(none.out, "written"), "10");
}

TEST_F(CliTest, AnalyzeEmptyPool) {
  const auto r = run_cli(base("analyze", dir_.write("empty.jsonl", "")));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "records"), "0");
  EXPECT_EQ(line_count(read_file(out_file("metrics.tsv"))), 1u);
}

TEST_F(CliTest, AnalyzeIsByteStable) {
  const auto pool = dir_.write("pool.jsonl", pool_text(3));
  ASSERT_EQ(run_cli(base("analyze", pool)).code, kExitOk);
  const auto first = read_file(out_file("metrics.tsv"));
  EXPECT_EQ(line_count(first), 4u);
  ASSERT_EQ(run_cli(base("analyze", pool)).code, kExitOk);
  EXPECT_EQ(read_file(out_file("metrics.tsv")), first);
}

TEST_F(CliTest, TokensWithoutTokenizerIsInputError) {
  const auto pool = dir_.write("pool.jsonl", pool_text(3));
  const auto r = run_cli(with(base("analyze", pool), {"--length-unit", "tokens", "--tokenizer", "none"}));
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("tokenizer"), std::string::npos);
}

TEST_F(CliTest, ScoreWritesScoresThenServesFromCache) {
  MockEndpoint judge(cotsel::testing::hashed_judge());
  const auto pool = dir_.write("pool.jsonl", pool_text(10));
  const auto args = with(base("score", pool), {"--judge-url", judge.url(), "--judge-model", "m"});
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "scored"), "10");
  EXPECT_EQ(line_count(read_file(out_file("scores.tsv"))), 11u);
  EXPECT_EQ(judge.requests(), 10u);

  judge.reset_requests();
  const auto again = run_cli(args);
  ASSERT_EQ(again.code, kExitOk) << again.err;
  EXPECT_EQ(field(again.out, "cached"), "10");
  EXPECT_EQ(judge.requests(), 0u);
}

TEST_F(CliTest, ScoreTotalFailureExitsThree) {
  MockEndpoint judge([](const json&, httplib::Response& res) {
    res.status = 503;
    res.set_content("busy", "text/plain");
  });
  const auto pool = dir_.write("pool.jsonl", pool_text(4));
  const auto r = run_cli(with(base("score", pool), {"--judge-url", judge.url(), "--judge-model", "m",
                                                    "--retries", "1", "--backoff-ms", "1"}));
  EXPECT_EQ(r.code, kExitScoringFailed);
  EXPECT_EQ(line_count(read_file(out_file("score_failures.tsv"))), 5u);
}

TEST_F(CliTest, SolveRateLabelsFeedJudgeData) {
  // Odd-indexed questions are solved, even ones are not.
  MockEndpoint solver([](const json& body, httplib::Response& res) {
    const auto prompt = body.value("prompt", std::string());
    const auto pos = prompt.find("Question number ");
    const int i = std::stoi(prompt.substr(pos + 16));
    const int n = body.value("n", 1);
    const std::string answer = "\\boxed{" + std::to_string(i % 2 ? i : i + 100) + "}";
    res.set_content(cotsel::testing::text_body(std::vector<std::string>(n, answer)).dump(),
                    "application/json");
  });
  const auto pool = dir_.write("pool.jsonl", pool_text(6));
  const auto r = run_cli(with(base("score", pool), {"--mode", "solve-rate", "--solve-url",
                                                    solver.url(), "--solve-model", "base",
                                                    "--n-samples", "2"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto labels = out_file("labels.jsonl");
  EXPECT_EQ(line_count(read_file(labels)), 6u);

  const auto e = run_cli({"emit-judge-data", "--labels", labels, "--out", out_dir(),
                          "--log-level", "quiet"});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_EQ(field(e.out, "hard"), "3");
  EXPECT_EQ(field(e.out, "easy"), "3");
  EXPECT_EQ(line_count(read_file(out_file("judge_train.jsonl"))), 6u);
}

TEST_F(CliTest, SelectLongestTenPercent) {
  const auto pool = dir_.write("pool.jsonl", pool_text(100));
  const auto r = run_cli(with(base("select", pool), {"--strategy", "longest", "--length-unit", "words"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "k"), "10");
  const auto manifest = json::parse(read_file(out_file("selection.json")));
  std::set<std::string> ids(manifest["ids"].begin(), manifest["ids"].end());
  std::set<std::string> expected;
  for (int i = 90; i < 100; ++i) expected.insert("r" + std::to_string(1000 + i));
  EXPECT_EQ(ids, expected);
  EXPECT_EQ(line_count(read_file(out_file("subset.jsonl"))), 10u);
}

TEST_F(CliTest, SelectIsDeterministic) {
  const auto pool = dir_.write("pool.jsonl", pool_text(50));
  const auto args = with(base("select", pool), {"--strategy", "random", "--seed", "3"});
  const auto a = run_cli(args);
  const auto subset = read_file(out_file("subset.jsonl"));
  const auto b = run_cli(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(field(a.out, "manifest_hash"), field(b.out, "manifest_hash"));
  EXPECT_EQ(read_file(out_file("subset.jsonl")), subset);
}

TEST_F(CliTest, JointWithZeroWeightMatchesLongest) {
  MockEndpoint judge(cotsel::testing::hashed_judge());
  const auto pool = dir_.write("pool.jsonl", pool_text(40));
  const std::vector<std::string> judge_args{"--judge-url", judge.url(), "--judge-model", "m"};
  ASSERT_EQ(run_cli(with(base("score", pool), judge_args)).code, kExitOk);

  auto ids_of = [&](const std::vector<std::string>& extra) {
    const auto r = run_cli(with(with(base("select", pool), judge_args), extra));
    EXPECT_EQ(r.code, kExitOk) << r.err;
    const auto m = json::parse(read_file(out_file("selection.json")));
    return std::set<std::string>(m["ids"].begin(), m["ids"].end());
  };
  EXPECT_EQ(ids_of({"--strategy", "joint", "--w", "0", "--k-fraction", "0.25"}),
            ids_of({"--strategy", "longest", "--k-fraction", "0.25"}));
  EXPECT_EQ(ids_of({"--strategy", "joint", "--w", "1", "--k-fraction", "0.25"}),
            ids_of({"--strategy", "difficult", "--k-fraction", "0.25"}));
}

TEST_F(CliTest, JointWithoutScoresPointsAtScore) {
  const auto pool = dir_.write("pool.jsonl", pool_text(10));
  const auto r = run_cli(with(base("select", pool), {"--strategy", "joint"}));
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("cotsel score"), std::string::npos);
}

TEST_F(CliTest, StatsTablesAndOverlap) {
  const auto pool = dir_.write("pool.jsonl", pool_text(30));
  ASSERT_EQ(run_cli(base("stats", pool)).code, kExitOk);
  EXPECT_TRUE(std::filesystem::exists(out_file("rethink_by_length.tsv")));
  EXPECT_TRUE(std::filesystem::exists(out_file("length_rethink_correlation.tsv")));

  ASSERT_EQ(run_cli(with(base("select", pool), {"--strategy", "longest"})).code, kExitOk);
  std::filesystem::copy_file(out_file("selection.json"), dir_.path("a.json"));
  ASSERT_EQ(run_cli(with(base("select", pool), {"--strategy", "shortest"})).code, kExitOk);
  const auto r = run_cli({"stats", "--overlap", dir_.path("a.json"), out_file("selection.json"),
                          "--out", out_dir(), "--log-level", "quiet"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("\t0\n"), std::string::npos);
}

std::string eval_line(const std::string& gold, const std::vector<std::string>& answers) {
  json sols = json::array();
  for (const auto& a : answers) sols.push_back("so \\boxed{" + a + "}");
  return json{{"problem_id", "p" + gold}, {"gold", gold}, {"solutions", sols}}.dump() + "\n";
}

TEST_F(CliTest, EvalAllCorrect) {
  const auto f = dir_.write("eval.jsonl", eval_line("3", {"3", "3"}) + eval_line("4", {"4"}));
  const auto r = run_cli({"eval", "--eval-file", f, "--out", out_dir()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "pass_at_1"), "1");
}

TEST_F(CliTest, EvalNineOfSixteen) {
  std::vector<std::string> answers(9, "7");
  for (int i = 0; i < 7; ++i) answers.push_back(std::to_string(20 + i));
  const auto r = run_cli({"eval", "--eval-file", dir_.write("eval.jsonl", eval_line("7", answers)),
                          "--out", out_dir(), "--k", "16"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(field(r.out, "pass_at_1"), "0.5625");
  EXPECT_EQ(field(r.out, "maj_at_16"), "1");
}

TEST_F(CliTest, EvalEmptyCandidatesIsInputError) {
  const auto f = dir_.write("eval.jsonl", eval_line("1", {}));
  EXPECT_EQ(run_cli({"eval", "--eval-file", f, "--out", out_dir()}).code, kExitInput);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const auto pool = dir_.write("pool.jsonl", pool_text(20));
  const auto ini = dir_.write("run.ini", "pool=" + pool + "\nout=" + out_dir() +
                                             "\nstrategy=shortest\nk-count=2\nlog-level=quiet\n");
  const auto from_file = run_cli({"select", "--config", ini});
  ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
  EXPECT_EQ(field(from_file.out, "strategy"), "shortest");
  EXPECT_EQ(field(from_file.out, "k"), "2");
  const auto overridden = run_cli({"select", "--config", ini, "--strategy", "longest"});
  ASSERT_EQ(overridden.code, kExitOk) << overridden.err;
  EXPECT_EQ(field(overridden.out, "strategy"), "longest");
}

TEST_F(CliTest, RunManifestRecordsConfigAndInputs) {
  const auto pool = dir_.write("pool.jsonl", pool_text(10));
  ASSERT_EQ(run_cli(with(base("select", pool), {"--strategy", "middle"})).code, kExitOk);
  const auto m = json::parse(read_file(out_file("select.run.json")));
  EXPECT_EQ(m["command"], "select");
  EXPECT_NE(m["config"].get<std::string>().find("middle"), std::string::npos);
  EXPECT_TRUE(m["inputs"].contains(pool));
}

TEST(CliParse, HelpAndBadFlags) {
  EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
  EXPECT_EQ(run_cli({"select", "--no-such-flag"}).code, kExitInput);
  EXPECT_EQ(run_cli({}).code, kExitInput);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitInput);
}

int shell_status(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

TEST(CliBinary, ExitCodes) {
  const std::string bin = COTSEL_CLI_PATH;
  EXPECT_EQ(shell_status(bin + " --help > /dev/null"), 0);
  EXPECT_EQ(shell_status(bin + " analyze --pool /nonexistent/pool.jsonl 2> /dev/null"), 2);
  EXPECT_EQ(shell_status(bin + " select --bogus 2> /dev/null"), 2);
}

}  // namespace
}  // namespace cotsel::cli
