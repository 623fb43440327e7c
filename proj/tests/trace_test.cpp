#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "cotsel/corpus.hpp"
#include "cotsel/tokenizer.hpp"
#include "cotsel/trace.hpp"
#include "cotsel/trace_metrics.hpp"
#include "support/temp_dir.hpp"

namespace cotsel::trace {
namespace {

using cotsel::testing::TempDir;

TEST(ParseThinkTags, EmptyConstructKeepsBlankTrace) {
  const auto p = parse_think_tags("<think>\n\n</think>Given the constraint...");
  EXPECT_FALSE(p.malformed);
  ASSERT_TRUE(p.trace.has_value());
  EXPECT_EQ(*p.trace, "\n\n");
  EXPECT_EQ(p.answer_section, "Given the constraint...");
}

TEST(ParseThinkTags, SimpleSplit) {
  const auto p = parse_think_tags("<think>T</think>A");
  EXPECT_FALSE(p.malformed);
  EXPECT_EQ(*p.trace, "T");
  EXPECT_EQ(p.answer_section, "A");
}

TEST(ParseThinkTags, AbsentTagsAreMalformed) {
  const auto p = parse_think_tags("no tags here");
  EXPECT_TRUE(p.malformed);
  EXPECT_FALSE(p.trace.has_value());
  EXPECT_EQ(p.answer_section, "no tags here");
}

TEST(ParseThinkTags, UnbalancedOrRepeatedTagsAreMalformed) {
  for (const std::string raw :
       {"<think>never closed", "</think><think>x", "<think>a</think>b</think>",
        "<think>a<think>b</think>c", "prefix<think>a</think>b", "</think>only close"}) {
    const auto p = parse_think_tags(raw);
    EXPECT_TRUE(p.malformed) << raw;
    EXPECT_FALSE(p.trace.has_value()) << raw;
    EXPECT_EQ(p.answer_section, raw);
  }
}

TEST(ParseThinkTags, CustomDelimiters) {
  const auto p = parse_think_tags("[[r]]x[[/r]]y", "[[r]]", "[[/r]]");
  EXPECT_EQ(*p.trace, "x");
  EXPECT_EQ(p.answer_section, "y");
  EXPECT_THROW(parse_think_tags("x", "", "</think>"), ConfigError);
}

TEST(ParseThinkTags, NeverLosesBytes) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "ab \n<>/thinkW";
  for (int iter = 0; iter < 2000; ++iter) {
    std::string t, a;
    const auto lt = rng() % 20, la = rng() % 20;
    for (std::size_t i = 0; i < lt; ++i) t += alphabet[rng() % alphabet.size()];
    for (std::size_t i = 0; i < la; ++i) a += alphabet[rng() % alphabet.size()];
    const std::string raw = "<think>" + t + "</think>" + a;
    const auto p = parse_think_tags(raw);
    if (p.malformed) {
      EXPECT_EQ(p.answer_section, raw);
      continue;
    }
    EXPECT_EQ(p.trace->size() + p.answer_section.size() + 15, raw.size());
    EXPECT_EQ(reconstruct_response(p.trace, p.answer_section), raw);
  }
}

TEST(SegmentSteps, SplitsOnBlankLines) {
  EXPECT_EQ(segment_steps("a\n\nb\n\nc"), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(SegmentSteps, WhitespaceOnlyIsEmpty) {
  EXPECT_TRUE(segment_steps(" \n\n \t\n").empty());
  EXPECT_TRUE(segment_steps("").empty());
}

TEST(SegmentSteps, LongSeparatorRunsCollapse) {
  EXPECT_EQ(segment_steps("a\n\n\n\nb"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(segment_steps("a\n \t\nb"), (std::vector<std::string>{"a", "b"}));
}

TEST(SegmentSteps, SingleNewlineStaysInStep) {
  EXPECT_EQ(segment_steps("  a\nb  \n\nc "), (std::vector<std::string>{"a\nb", "c"}));
}

TEST(SegmentSteps, JoinThenSegmentIsIdentity) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "xyz Wait,.\n";
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<std::string> steps;
    const auto n = rng() % 6;
    for (std::size_t s = 0; s < n; ++s) {
      std::string step;
      const auto len = 1 + rng() % 12;
      for (std::size_t i = 0; i < len; ++i) step += alphabet[rng() % alphabet.size()];
      auto norm = segment_steps(step);
      if (norm.size() == 1) steps.push_back(norm[0]);
    }
    std::string joined;
    for (std::size_t i = 0; i < steps.size(); ++i) joined += (i ? "\n\n" : "") + steps[i];
    EXPECT_EQ(segment_steps(joined), steps) << joined;
  }
}

TEST(CountRethinking, CountsEveryWholeWord) {
  const auto c = count_rethinking(
      "Wait, but if the derivative is zero... Wait, perhaps I made a mistake",
      RethinkLexicon{});
  EXPECT_EQ(c.at("Wait"), 2u);
  EXPECT_EQ(c.total(), 2u);
}

TEST(CountRethinking, NoLexiconWordGivesZeros) {
  const auto c = count_rethinking("Just compute 6 + 4 = 10.", RethinkLexicon{});
  EXPECT_EQ(c, KeywordCounts::zeros(RethinkLexicon{}));
}

TEST(CountRethinking, WordBoundaryRejectsLongerWord) {
  EXPECT_EQ(count_rethinking("Waiting for results", RethinkLexicon{}).at("Wait"), 0u);
  EXPECT_EQ(count_rethinking("AWait", RethinkLexicon{}).at("Wait"), 0u);
  EXPECT_EQ(count_rethinking("Wait_x", RethinkLexicon{}).at("Wait"), 0u);
  EXPECT_EQ(count_rethinking("(Wait)", RethinkLexicon{}).at("Wait"), 1u);
}

TEST(CountRethinking, CaseSensitive) {
  EXPECT_EQ(count_rethinking("wait WAIT Wait", RethinkLexicon{}).at("Wait"), 1u);
}

TEST(CountRethinking, PrefixOfStepMode) {
  RethinkLexicon lex;
  lex.match_mode = MatchMode::kPrefixOfStep;
  const auto c = count_rethinking("Wait, no.\n\nSo Wait again.\n\nMaybe.\n\nWaiting.", lex);
  EXPECT_EQ(c.at("Wait"), 1u);
  EXPECT_EQ(c.at("Maybe"), 1u);
}

TEST(CountRethinking, InjectingKeywordAddsExactlyOne) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"so", "Wait", "x", "Maybe", "then", "However,",
                                          "Alternatively", "Waiting", "ok."};
  const RethinkLexicon lex;
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<std::string> toks;
    const auto n = rng() % 15;
    for (std::size_t i = 0; i < n; ++i) toks.push_back(words[rng() % words.size()]);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
      return s;
    };
    const auto before = count_rethinking(join(toks), lex);
    const auto& kw = lex.keywords[rng() % lex.keywords.size()];
    toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(rng() % (toks.size() + 1)), kw);
    const auto after = count_rethinking(join(toks), lex);
    EXPECT_EQ(after.total(), before.total() + 1);
    for (const auto& other : lex.keywords) {
      EXPECT_EQ(after.at(other), before.at(other) + (other == kw ? 1 : 0));
    }
  }
}

TEST(Lexicon, LoadsFileAndValidates) {
  TempDir dir;
  const auto p = dir.write("lex.json", R"({"keywords": ["等等", "Hmm"], "match_mode": "prefix-of-step"})");
  const auto lex = load_lexicon(p);
  EXPECT_EQ(lex.keywords, (std::vector<std::string>{"等等", "Hmm"}));
  EXPECT_EQ(lex.match_mode, MatchMode::kPrefixOfStep);
  EXPECT_THROW(load_lexicon(dir.write("dup.json", R"({"keywords": ["a", "a"]})")), ConfigError);
  EXPECT_THROW(load_lexicon(dir.write("none.json", R"({"keywords": []})")), ConfigError);
  EXPECT_THROW(load_lexicon(dir.path("missing.json")), IoError);
}

TEST(Lexicon, NonAsciiKeywordMatches) {
  RethinkLexicon lex;
  lex.keywords = {"等等"};
  EXPECT_EQ(count_rethinking("等等，我再想想。等等", lex).at("等等"), 2u);
}

TEST(MeasureLength, EmptyIsZeroForEveryUnit) {
  PretokenSegmenter seg;
  EXPECT_EQ(measure_length("", LengthUnit::kChars), 0u);
  EXPECT_EQ(measure_length("", LengthUnit::kWords), 0u);
  EXPECT_EQ(measure_length("", LengthUnit::kTokens, &seg), 0u);
}

TEST(MeasureLength, WordsAreNonWhitespaceRuns) {
  EXPECT_EQ(measure_length("a b  c", LengthUnit::kWords), 3u);
  EXPECT_EQ(measure_length("\n a\tb\n", LengthUnit::kWords), 2u);
}

TEST(MeasureLength, CharsCountCodePoints) {
  EXPECT_EQ(measure_length(std::string(1000, 'x'), LengthUnit::kChars), 1000u);
  EXPECT_EQ(measure_length("é−", LengthUnit::kChars), 2u);
}

TEST(MeasureLength, TokensWithoutSegmenterIsConfigError) {
  EXPECT_THROW(measure_length("abc", LengthUnit::kTokens), ConfigError);
}

TEST(MeasureLength, AbsentTraceIsZero) {
  EXPECT_EQ(measure_trace(std::nullopt, LengthUnit::kWords), 0u);
}

TEST(MeasureLength, MonotoneUnderConcatenation) {
  std::mt19937_64 rng(5);
  PretokenSegmenter seg;
  const std::string alphabet = "ab 1\n,.'é";
  for (int iter = 0; iter < 1000; ++iter) {
    std::string a, b;
    for (std::size_t i = rng() % 12; i > 0; --i) a += alphabet[rng() % alphabet.size()];
    for (std::size_t i = rng() % 12; i > 0; --i) b += alphabet[rng() % alphabet.size()];
    for (auto u : {LengthUnit::kChars, LengthUnit::kWords, LengthUnit::kTokens}) {
      EXPECT_GE(measure_length(a + b, u, &seg), measure_length(a, u, &seg));
    }
  }
}

TEST(LengthUnit, ParsesNames) {
  EXPECT_EQ(parse_length_unit("words"), LengthUnit::kWords);
  EXPECT_THROW(parse_length_unit("bytes"), ConfigError);
}

corpus::InstructionRecord record_with(const std::string& response) {
  return corpus::make_record("q", response, corpus::FieldMapping{}, "r");
}

TEST(ComputeMetrics, EmptyThinkIsAllZero) {
  PretokenSegmenter seg;
  const auto m = compute_metrics(record_with("<think>\n\n</think>Answer"), RethinkLexicon{}, &seg);
  EXPECT_TRUE(m.has_trace);
  EXPECT_EQ(m.char_len, 0u);
  EXPECT_EQ(m.word_len, 0u);
  EXPECT_EQ(m.token_len, 0u);
  EXPECT_EQ(m.step_count, 0u);
  EXPECT_EQ(m.rethink_total, 0u);
  EXPECT_EQ(m.rethink_density, 0.0);
}

TEST(ComputeMetrics, ThreeStepsOneWaitEach) {
  const auto m = compute_metrics(record_with("<think>Wait a.\n\nWait b.\n\nWait c.</think>x"),
                                 RethinkLexicon{}, nullptr);
  EXPECT_EQ(m.step_count, 3u);
  EXPECT_EQ(m.rethink_total, 3u);
  EXPECT_DOUBLE_EQ(m.rethink_density, 1.0);
  EXPECT_EQ(m.step_initial_counts.at("Wait"), 3u);
}

TEST(ComputeMetrics, SevenWordsTwoSteps) {
  const auto m = compute_metrics(record_with("<think>one two three\n\nfour five six seven</think>"),
                                 RethinkLexicon{}, nullptr);
  EXPECT_EQ(m.word_len, 7u);
  EXPECT_EQ(m.step_count, 2u);
}

TEST(ComputeMetrics, MalformedIsZeroWithFlag) {
  const auto m = compute_metrics(record_with("Wait, no tags. Wait."), RethinkLexicon{}, nullptr);
  EXPECT_TRUE(m.malformed);
  EXPECT_FALSE(m.has_trace);
  EXPECT_EQ(m.rethink_total, 0u);
  EXPECT_EQ(m.word_len, 0u);
  EXPECT_EQ(m.keyword_counts, KeywordCounts::zeros(RethinkLexicon{}));
}

TEST(ComputeMetrics, TotalEqualsKeywordSum) {
  const auto m = compute_metrics(
      record_with("<think>Maybe. However, Wait.\n\nAlternatively Wait</think>"), RethinkLexicon{},
      nullptr);
  std::size_t sum = 0;
  for (const auto& e : m.keyword_counts.entries) sum += e.second;
  EXPECT_EQ(m.rethink_total, sum);
  EXPECT_EQ(sum, 5u);
}

TEST(MetricsRow, ColumnsMatchHeader) {
  const auto m = compute_metrics(record_with("<think>Wait.</think>"), RethinkLexicon{}, nullptr);
  const auto header = metrics_header(RethinkLexicon{});
  const auto row = metrics_row(m);
  EXPECT_EQ(std::count(header.begin(), header.end(), '\t'), std::count(row.begin(), row.end(), '\t'));
  EXPECT_EQ(row.substr(0, 2), "r\t");
}

}  // namespace
}  // namespace cotsel::trace
