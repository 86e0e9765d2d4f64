#include <numeric>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "promptrank/corpus.h"
#include "promptrank/errors.h"

namespace promptrank {
namespace {

std::vector<CorpusRecord> Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseCorpus(in);
}

TEST(Corpus, ParsesOneRecord) {
  const auto recs = Parse(R"({"id":"a","text":"Deep learning.","gold":["deep learning"]})" "\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].id, "a");
  EXPECT_EQ(recs[0].text, "Deep learning.");
  EXPECT_EQ(recs[0].gold.size(), 1u);
}

TEST(Corpus, EmptyFileGivesNoRecords) { EXPECT_TRUE(Parse("").empty()); }

TEST(Corpus, BlankLinesAreSkipped) {
  const auto recs = Parse("\n" R"({"id":"a","text":"x","gold":[]})" "\n\n" R"({"id":"b","text":"y","gold":[]})");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].id, "b");
}

TEST(Corpus, DuplicateIdNamesTheId) {
  try {
    Parse(R"({"id":"a","text":"x","gold":[]})" "\n" R"({"id":"a","text":"y","gold":[]})" "\n");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("\"a\""), std::string::npos) << e.what();
  }
}

TEST(Corpus, MalformedLineNamesLineNumber) {
  for (const std::string bad : {"{not json", R"({"id":"b","text":"y"})", R"({"id":"","text":"y","gold":[]})",
                                R"({"id":"b","text":"","gold":[]})", R"({"id":"b","text":"y","gold":[3]})"}) {
    try {
      Parse(std::string(R"({"id":"a","text":"x","gold":[]})") + "\n" + bad + "\n");
      FAIL() << "accepted: " << bad;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(Corpus, WriteThenParseRoundTrips) {
  const std::vector<CorpusRecord> recs{{"d1", "Text with \"quotes\"\nand a newline.", {"quotes", "newline"}},
                                       {"d2", "Ünïcode text", {}}};
  std::ostringstream out;
  WriteCorpus(out, recs);
  EXPECT_EQ(Parse(out.str()), recs);
}

TEST(Corpus, LoadMissingFileIsInputError) { EXPECT_THROW(LoadCorpus("/nonexistent/corpus.jsonl"), InputError); }

TEST(CorpusStats, HandCountedSingleDocument) {
  const std::vector<CorpusRecord> recs{{"x", "a b c", {"a b"}}};
  const auto s = ComputeStats(recs);
  EXPECT_EQ(s.n_doc, 1u);
  EXPECT_DOUBLE_EQ(s.avg_len_words, 3.0);
  EXPECT_EQ(s.total_gold, 1u);
  ASSERT_EQ(s.gold_length_histogram.count(2), 1u);
  EXPECT_DOUBLE_EQ(s.gold_length_histogram.at(2), 100.0);
}

TEST(CorpusStats, HistogramSumsToHundredAndBucketsLongPhrases) {
  const std::vector<CorpusRecord> recs{{"x", "one two", {"a", "a b", "a b c", "a b c d", "a b c d e", "a b c d e f g"}},
                                       {"y", "three", {"p q"}}};
  const std::vector<std::size_t> cands{4, 6};
  const auto s = ComputeStats(recs, std::span<const std::size_t>(cands));
  EXPECT_EQ(s.total_candidates, 10u);
  EXPECT_EQ(s.total_gold, 7u);
  double sum = 0;
  for (const auto& [len, pct] : s.gold_length_histogram) {
    EXPECT_GE(len, 1);
    EXPECT_LE(len, 5);
    sum += pct;
  }
  EXPECT_NEAR(sum, 100.0, 0.1);
  EXPECT_NEAR(s.gold_length_histogram.at(5), 200.0 / 7, 1e-9);
  EXPECT_DOUBLE_EQ(s.avg_len_words, 1.5);
}

TEST(CorpusStats, PermutationInvariant) {
  std::vector<CorpusRecord> recs{{"x", "a b c d", {"a", "b c"}}, {"y", "e", {"e f g"}}, {"z", "h i", {}}};
  const auto a = ToJson(ComputeStats(recs));
  std::swap(recs[0], recs[2]);
  EXPECT_EQ(ToJson(ComputeStats(recs)), a);
}

TEST(CorpusStats, EmptyCorpusRejected) { EXPECT_THROW(ComputeStats({}), std::invalid_argument); }

TEST(CorpusStats, WhitespaceWordCount) {
  EXPECT_EQ(CountWhitespaceWords("  a\tb\n c  "), 3u);
  EXPECT_EQ(CountWhitespaceWords(""), 0u);
}

}  // namespace
}  // namespace promptrank
