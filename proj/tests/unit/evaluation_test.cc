#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "promptrank/evaluation.h"
#include "promptrank/porter_stemmer.h"
#include "test_support.h"

namespace promptrank {
namespace {

using Phrases = std::vector<std::string>;

TEST(PorterStemmer, Examples) {
  EXPECT_EQ(PorterStem("caresses"), "caress");
  EXPECT_EQ(PorterStem("relational"), "relat");
  EXPECT_EQ(PorterStem("sky"), "sky");
  EXPECT_EQ(PorterStem("learning"), "learn");
}

// Vocabulary stemmed by the reference implementation in its original mode.
TEST(PorterStemmer, MatchesReferenceVocabulary) {
  std::ifstream in(testing::DataPath("porter_oracle.tsv"));
  std::string line;
  std::size_t n = 0, wrong = 0;
  while (std::getline(in, line)) {
    // "s" stems to the empty string, so split on the tab rather than whitespace
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos) << line;
    const std::string word = line.substr(0, tab), stem = line.substr(tab + 1);
    ++n;
    if (PorterStem(word) != stem) {
      if (++wrong <= 10) ADD_FAILURE() << word << " -> " << PorterStem(word) << ", want " << stem;
    }
  }
  EXPECT_GT(n, 5000u);
  EXPECT_EQ(wrong, 0u);
}

TEST(NormalizePhrase, Examples) {
  EXPECT_EQ(NormalizePhrase("Deep Learning"), "deep learn");
  EXPECT_EQ(NormalizePhrase("AI"), "ai");
  EXPECT_EQ(NormalizePhrase(" neural   networks "), "neural network");
  EXPECT_THROW(NormalizePhrase("   "), std::invalid_argument);
}

TEST(PhraseOccursIn, ContiguousMatch) {
  const Phrases words{"deep", "learn", "model", "rank"};
  EXPECT_TRUE(PhraseOccursIn("learn model", words));
  EXPECT_FALSE(PhraseOccursIn("deep model", words));
  EXPECT_FALSE(PhraseOccursIn("rank more", words));
}

TEST(Evaluate, HandExample) {
  const std::vector<Phrases> pred{{"a", "x", "b", "y", "z", "c"}};
  const std::vector<Phrases> gold{{"a", "b", "c", "d"}};
  const std::vector<std::size_t> ks{5};
  const auto r = Evaluate(pred, gold, ks);
  EXPECT_DOUBLE_EQ(r.per_k.at(5).precision, 0.4);
  EXPECT_DOUBLE_EQ(r.per_k.at(5).recall, 0.5);
  EXPECT_NEAR(r.per_k.at(5).f1, 4.0 / 9.0, 1e-9);
  EXPECT_EQ(r.counts.at(5).correct, 2u);
  EXPECT_EQ(r.counts.at(5).predicted, 5u);
  EXPECT_EQ(r.counts.at(5).gold, 4u);
}

TEST(Evaluate, PerfectAndZero) {
  const std::vector<Phrases> gold{{"a", "b"}};
  EXPECT_EQ(Evaluate(std::vector<Phrases>{{"b", "a"}}, gold, kDefaultKs).per_k.at(5).f1, 1.0);
  EXPECT_EQ(Evaluate(std::vector<Phrases>{{"c"}}, gold, kDefaultKs).per_k.at(5).f1, 0.0);
}

TEST(Evaluate, EmptyGoldEverywhere) {
  const auto r = Evaluate(std::vector<Phrases>{{"a", "b"}, {"c"}}, std::vector<Phrases>{{}, {}}, kDefaultKs);
  for (const auto& [k, s] : r.per_k) {
    EXPECT_EQ(s.recall, 0.0);
    EXPECT_EQ(s.f1, 0.0);
    EXPECT_EQ(r.counts.at(k).predicted, 3u);
  }
}

TEST(Evaluate, DuplicatePredictionsRemovedBeforeCut) {
  const std::vector<Phrases> gold{{"a", "b"}};
  const std::vector<std::size_t> ks{2};
  const auto r = Evaluate(std::vector<Phrases>{{"a", "a", "b"}}, gold, ks);
  EXPECT_EQ(r.counts.at(2).correct, 2u);
  EXPECT_EQ(r.counts.at(2).predicted, 2u);
}

TEST(Evaluate, Macro) {
  const std::vector<Phrases> pred{{"a"}, {"x", "y"}};
  const std::vector<Phrases> gold{{"a"}, {"y", "z"}};
  const std::vector<std::size_t> ks{5};
  const auto r = Evaluate(pred, gold, ks, Averaging::kMacro);
  EXPECT_DOUBLE_EQ(r.per_k.at(5).precision, (1.0 + 0.5) / 2);
  EXPECT_DOUBLE_EQ(r.per_k.at(5).recall, (1.0 + 0.5) / 2);
  EXPECT_DOUBLE_EQ(r.per_k.at(5).f1, (1.0 + 0.5) / 2);
}

TEST(Evaluate, RejectsBadArguments) {
  const std::vector<Phrases> one{{"a"}};
  const std::vector<Phrases> two{{"a"}, {"b"}};
  EXPECT_THROW(Evaluate(one, two, kDefaultKs), std::invalid_argument);
  EXPECT_THROW(Evaluate(one, one, std::vector<std::size_t>{}), std::invalid_argument);
}

TEST(Evaluate, MatchesBruteForceCounter) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Phrases> pred, gold;
    oracle::RandomToyCorpus(rng, pred, gold);
    const auto r = Evaluate(pred, gold, kDefaultKs);
    for (std::size_t k : kDefaultKs) {
      const auto c = oracle::CountAtK(pred, gold, k);
      const auto want = oracle::MicroScores(c);
      EXPECT_EQ(r.counts.at(k).correct, c.correct);
      EXPECT_EQ(r.counts.at(k).predicted, c.predicted);
      EXPECT_EQ(r.counts.at(k).gold, c.gold);
      EXPECT_NEAR(r.per_k.at(k).f1, want.f1, 1e-12);
    }
    EXPECT_LE(r.per_k.at(5).recall, r.per_k.at(10).recall);
    EXPECT_LE(r.per_k.at(10).recall, r.per_k.at(15).recall);
  }
}

TEST(Evaluate, InvariantToGoldOrderAndDocumentOrder) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Phrases> pred, gold;
    oracle::RandomToyCorpus(rng, pred, gold);
    const auto base = ToJson(Evaluate(pred, gold, kDefaultKs));
    for (auto& g : gold) std::reverse(g.begin(), g.end());
    std::reverse(pred.begin(), pred.end());
    std::reverse(gold.begin(), gold.end());
    EXPECT_EQ(ToJson(Evaluate(pred, gold, kDefaultKs)), base);
  }
}

TEST(EvalReport, JsonRoundTrip) {
  const auto r = Evaluate(std::vector<Phrases>{{"a", "b", "c"}}, std::vector<Phrases>{{"a", "d"}}, kDefaultKs,
                          Averaging::kMacro);
  const auto j = ToJson(r);
  EXPECT_TRUE(j.at("k").contains("5"));
  EXPECT_TRUE(j.at("k").at("10").contains("f1"));
  EXPECT_EQ(ToJson(EvalReportFromJson(j)), j);
}

}  // namespace
}  // namespace promptrank
