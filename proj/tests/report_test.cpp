#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cotsel/corpus.hpp"
#include "cotsel/ranking.hpp"
#include "cotsel/report.hpp"
#include "cotsel/trace_metrics.hpp"
#include "support/temp_dir.hpp"

namespace cotsel::report {
namespace {

using cotsel::testing::read_file;
using cotsel::testing::TempDir;
using trace::LengthUnit;

// A trace of `words` filler words with one "Wait," every `gap` words.
std::string make_trace(std::size_t words, std::size_t gap) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (!s.empty()) s += ' ';
    s += (gap > 0 && i % gap == gap - 1) ? "Wait," : "step";
  }
  return s;
}

trace::TraceMetrics metrics_of(const std::string& id, const std::string& think) {
  const auto r = corpus::make_record("q " + id, "<think>" + think + "</think>answer", {}, id);
  return trace::compute_metrics(r, trace::RethinkLexicon{});
}

std::vector<trace::TraceMetrics> growing_corpus() {
  // Longer traces also rethink more often.
  std::vector<trace::TraceMetrics> out;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t words = 20 + 10 * i;
    const std::size_t gap = std::max<std::size_t>(2, 40 - i / 3);
    out.push_back(metrics_of("r" + std::to_string(i), make_trace(words, gap)));
  }
  return out;
}

TEST(LengthBinnedRethink, MeansRiseWithLength) {
  const auto s = length_binned_rethink(growing_corpus(), 5, LengthUnit::kWords);
  ASSERT_EQ(s.per_bin.size(), 5u);
  EXPECT_TRUE(s.warnings.empty());
  for (std::size_t i = 1; i < s.per_bin.size(); ++i) {
    EXPECT_GT(s.per_bin[i].mean_rethink_total, s.per_bin[i - 1].mean_rethink_total);
    EXPECT_GT(s.per_bin[i].min_length, s.per_bin[i - 1].max_length);
  }
  for (const auto& b : s.per_bin) EXPECT_EQ(b.count, 20u);
  EXPECT_EQ(s.keywords.front(), "Wait");
  EXPECT_DOUBLE_EQ(s.per_bin[0].mean_keyword[0], s.per_bin[0].mean_rethink_total);
}

TEST(LengthBinnedRethink, CountsSumToRecordsWithTraces) {
  auto m = growing_corpus();
  m.resize(37);
  m.push_back(trace::compute_metrics(corpus::make_record("q", "no tags", {}, "x"),
                                     trace::RethinkLexicon{}));
  const auto s = length_binned_rethink(m, 4, LengthUnit::kWords);
  EXPECT_EQ(s.total(), 37u);
}

TEST(LengthBinnedRethink, IdenticalLengthsCollapseToOneBin) {
  std::vector<trace::TraceMetrics> m;
  for (int i = 0; i < 10; ++i) m.push_back(metrics_of("r" + std::to_string(i), make_trace(30, 5)));
  const auto s = length_binned_rethink(m, 5, LengthUnit::kWords);
  ASSERT_EQ(s.per_bin.size(), 1u);
  EXPECT_EQ(s.per_bin[0].count, 10u);
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("1 distinct"), std::string::npos);
}

TEST(LengthBinnedRethink, TiesNeverStraddleBins) {
  std::vector<trace::TraceMetrics> m;
  const std::size_t lengths[] = {5, 5, 5, 5, 9, 9, 9, 12, 12, 30};
  for (std::size_t i = 0; i < 10; ++i) {
    m.push_back(metrics_of("r" + std::to_string(i), make_trace(lengths[i], 0)));
  }
  const auto s = length_binned_rethink(m, 3, LengthUnit::kWords);
  for (std::size_t i = 1; i < s.per_bin.size(); ++i) {
    EXPECT_GT(s.per_bin[i].min_length, s.per_bin[i - 1].max_length);
  }
  EXPECT_EQ(s.total(), 10u);
}

TEST(LengthBinnedRethink, TooFewRecordsIsError) {
  auto m = growing_corpus();
  m.resize(3);
  EXPECT_THROW(length_binned_rethink(m, 5, LengthUnit::kWords), MetricError);
  EXPECT_THROW(length_binned_rethink(growing_corpus(), 1, LengthUnit::kWords), MetricError);
}

TEST(Spearman, PerfectAgreementAndReversal) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_NEAR(spearman(x, {10, 20, 30, 40, 50}), 1.0, 1e-12);
  EXPECT_NEAR(spearman(x, {5, 4, 3, 2, 1}), -1.0, 1e-12);
}

TEST(Spearman, OneAdjacentSwapPairExample) {
  // 1 - 6 * 4 / (5 * 24)
  EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}), 0.8, 1e-12);
}

TEST(Spearman, AverageRanksForTies) {
  EXPECT_EQ(average_ranks({10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> x, y, fx, gy;
    for (int i = 0; i < 40; ++i) {
      x.push_back(static_cast<double>(rng() % 100));
      y.push_back(static_cast<double>(rng() % 100));
      fx.push_back(std::exp(x.back() / 10.0));
      gy.push_back(3.0 * y.back() * y.back() * y.back() + 1.0);
    }
    EXPECT_NEAR(spearman(x, y), spearman(fx, gy), 1e-12);
  }
}

TEST(Spearman, ErrorsOnDegenerateInput) {
  EXPECT_THROW(spearman({1, 2, 3}, {4, 4, 4}), MetricError);
  EXPECT_THROW(spearman({1, 2}, {1}), MetricError);
  EXPECT_THROW(spearman({1}, {1}), MetricError);
}

TEST(LengthRethinkCorrelation, PositiveOnGrowingCorpus) {
  EXPECT_GT(length_rethink_correlation(growing_corpus(), LengthUnit::kWords), 0.9);
}

TEST(LengthRethinkCorrelation, NeedsTenNonEmptyTraces) {
  auto m = growing_corpus();
  m.resize(9);
  m.push_back(metrics_of("empty", "   "));
  EXPECT_THROW(length_rethink_correlation(m, LengthUnit::kWords), MetricError);
  m.push_back(metrics_of("tenth", make_trace(500, 3)));
  EXPECT_NO_THROW(length_rethink_correlation(m, LengthUnit::kWords));
}

TEST(GenerationRethink, NoKeywordsGivesZeroRow) {
  const auto rows = generation_rethink_stats({{"base", {"so 2+2=4", "done"}}}, trace::RethinkLexicon{});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].solutions, 2u);
  EXPECT_EQ(rows[0].rethink_total, 0u);
  for (double m : rows[0].per_solution_mean) EXPECT_EQ(m, 0.0);
}

TEST(GenerationRethink, DoubledUsageDoublesMean) {
  const trace::RethinkLexicon lex;
  const auto rows = generation_rethink_stats(
      {{"a", {"Wait, no.", "Maybe so."}}, {"b", {"Wait, Maybe. However, Wait.", "x"}}}, lex);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[1].mean_rethink / rows[0].mean_rethink, 2.0);
  EXPECT_EQ(rows[1].totals.entries[0].second, 2u);
  EXPECT_DOUBLE_EQ(rows[1].per_solution_mean[0], 1.0);
  EXPECT_DOUBLE_EQ(rows[0].mean_words, 2.0);
}

TEST(ReadGenerations, GroupsKeepFirstAppearanceOrder) {
  TempDir dir;
  const auto p = dir.write("g.jsonl",
                           "{\"group\": \"tuned\", \"solution\": \"Wait\"}\n"
                           "not json\n"
                           "{\"group\": \"base\", \"solutions\": [\"a\", \"b\"]}\n"
                           "{\"group\": \"tuned\", \"solution\": \"Maybe\"}\n");
  const auto g = read_generations(p);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].first, "tuned");
  EXPECT_EQ(g[0].second.size(), 2u);
  EXPECT_EQ(g[1].second.size(), 2u);
  EXPECT_THROW(read_generations(dir.path("absent.jsonl")), IoError);
}

ranking::Selection selection_of(const ranking::IdList& pool, const ranking::IdList& ids) {
  return ranking::make_selection(ranking::SelectionSpec{}, pool, ids);
}

TEST(SelectionOverlap, IdenticalDisjointAndPartial) {
  const ranking::IdList pool{"a", "b", "c", "d", "e", "f"};
  EXPECT_DOUBLE_EQ(selection_overlap(selection_of(pool, {"a", "b"}), selection_of(pool, {"b", "a"})).jaccard, 1.0);
  EXPECT_DOUBLE_EQ(selection_overlap(selection_of(pool, {"a", "b"}), selection_of(pool, {"c", "d"})).jaccard, 0.0);
  const auto r = selection_overlap(selection_of(pool, {"a", "b", "c"}), selection_of(pool, {"b", "c", "d", "e"}));
  EXPECT_EQ(r.shared, 2u);
  EXPECT_NEAR(r.jaccard, 2.0 / 5.0, 1e-15);
  EXPECT_NEAR(selection_overlap(selection_of(pool, {"a", "b"}), selection_of(pool, {"b", "c"})).jaccard,
              1.0 / 3.0, 1e-15);
}

TEST(SelectionOverlap, Symmetric) {
  const ranking::IdList pool{"a", "b", "c", "d"};
  const auto x = selection_of(pool, {"a", "b", "c"});
  const auto y = selection_of(pool, {"c", "d"});
  EXPECT_EQ(selection_overlap(x, y).jaccard, selection_overlap(y, x).jaccard);
}

TEST(SelectionOverlap, DifferentPoolsIsError) {
  EXPECT_THROW(selection_overlap(selection_of({"a", "b"}, {"a"}), selection_of({"a", "c"}, {"a"})),
               MetricError);
}

TEST(Tables, HeadersAndRowCounts) {
  TempDir dir;
  write_binned_table(length_binned_rethink(growing_corpus(), 5, LengthUnit::kWords), dir.path("bins.tsv"));
  const auto bins = read_file(dir.path("bins.tsv"));
  EXPECT_EQ(bins.rfind("bin\tlength_from\tlength_to", 0), 0u);
  EXPECT_NE(bins.find("\tmean_Wait"), std::string::npos);
  EXPECT_EQ(std::count(bins.begin(), bins.end(), '\n'), 6);

  write_generation_table(generation_rethink_stats({{"a", {"Wait"}}}, trace::RethinkLexicon{}),
                         dir.path("gen.tsv"));
  const auto gen = read_file(dir.path("gen.tsv"));
  EXPECT_NE(gen.find("total_Wait"), std::string::npos);
  EXPECT_NE(gen.find("a\t1\t1\t1\t"), std::string::npos);

  const ranking::IdList pool{"a", "b"};
  write_overlap_table({selection_overlap(selection_of(pool, {"a"}), selection_of(pool, {"a", "b"}))},
                      dir.path("ov.tsv"));
  const auto ov = read_file(dir.path("ov.tsv"));
  EXPECT_EQ(ov.rfind("a\tb\tsize_a\tsize_b\tshared\tjaccard\n", 0), 0u);
  EXPECT_NE(ov.find("\t1\t2\t1\t0.5\n"), std::string::npos);
}

}  // namespace
}  // namespace cotsel::report
