#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "promptrank/candidates.h"

namespace promptrank {
namespace {

TaggedDocument Doc(std::vector<std::string> tokens, std::vector<std::string> tags, std::size_t cap = 512) {
  return MakeTaggedDocument(std::move(tokens), std::move(tags), cap);
}

TEST(Candidates, AdjectiveNounRunIsOneCandidate) {
  const auto c = ExtractCandidates(Doc({"efficient", "keyphrase", "extraction"}, {"JJ", "NN", "NN"}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].surface, "efficient keyphrase extraction");
  EXPECT_EQ(c[0].first_pos, 0u);
  EXPECT_EQ(c[0].word_len, 3u);
}

TEST(Candidates, NoTrailingNounNoCandidate) { EXPECT_TRUE(ExtractCandidates(Doc({"the", "big"}, {"DT", "JJ"})).empty()); }

TEST(Candidates, DuplicatesKeepEarliest) {
  const auto c = ExtractCandidates(Doc({"cats", "chase", "cats"}, {"NNS", "VBP", "NNS"}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].surface, "cats");
  EXPECT_EQ(c[0].first_pos, 0u);
}

TEST(Candidates, DedupIsCaseInsensitiveAndKeepsFirstSurface) {
  const auto c = ExtractCandidates(Doc({"Neural", "Networks", "and", "neural", "networks"}, {"JJ", "NNS", "CC", "JJ", "NNS"}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].surface, "Neural Networks");
  EXPECT_EQ(c[0].normalized, "neural networks");
}

TEST(Candidates, TrailingAdjectivesAreDropped) {
  const auto c = ExtractCandidates(Doc({"data", "fast", "runs"}, {"NN", "JJ", "VBZ"}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].surface, "data");
}

TEST(Candidates, ComparativeAdjectivesBreakRuns) {
  const auto c = ExtractCandidates(Doc({"larger", "model"}, {"JJR", "NN"}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].surface, "model");
  EXPECT_EQ(c[0].first_pos, 1u);
}

TEST(Candidates, MaxWordLengthDropsLongCandidates) {
  const auto doc = Doc({"a", "b", "c", "x", "d"}, {"NN", "NN", "NN", "VB", "NN"});
  EXPECT_EQ(ExtractCandidates(doc).size(), 2u);
  const auto c = ExtractCandidates(doc, 2);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].surface, "d");
}

TEST(Candidates, ClampPosition) {
  const auto doc = Doc(std::vector<std::string>(1000, "w"), std::vector<std::string>(1000, "NN"));
  Candidate c;
  c.first_pos = 10;
  EXPECT_EQ(ClampPosition(c, doc), 10u);
  c.first_pos = 900;
  EXPECT_EQ(ClampPosition(c, doc), 511u);
  c.first_pos = 0;
  EXPECT_EQ(ClampPosition(c, doc), 0u);
}

TEST(Candidates, MatchesBruteForceOracle) {
  std::mt19937_64 rng(20230701);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto doc = oracle::RandomTaggedDocument(rng);
    ASSERT_EQ(ExtractCandidates(doc), oracle::BruteForceCandidates(doc)) << "trial " << trial;
  }
}

TEST(Candidates, OutputInvariants) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto doc = oracle::RandomTaggedDocument(rng, 40);
    const auto cands = ExtractCandidates(doc);
    std::set<std::string> forms;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const auto& c = cands[i];
      EXPECT_GE(c.word_len, 1u);
      EXPECT_LT(c.first_pos, doc.tokens.size());
      EXPECT_TRUE(IsNounTag(doc.tags[c.first_pos + c.word_len - 1]));
      EXPECT_TRUE(forms.insert(c.normalized).second);
      if (i > 0) {
        EXPECT_LT(cands[i - 1].first_pos, c.first_pos);
      }
      // Maximal: neither neighbour extends the run.
      if (c.first_pos > 0) {
        const auto& prev = doc.tags[c.first_pos - 1];
        EXPECT_FALSE(IsNounTag(prev) || IsAdjectiveTag(prev));
      }
    }
  }
}

}  // namespace
}  // namespace promptrank
