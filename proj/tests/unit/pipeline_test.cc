#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "promptrank/config.h"
#include "promptrank/errors.h"
#include "promptrank/pipeline.h"
#include "promptrank/predictions.h"
#include "promptrank/stub_backend.h"
#include "promptrank/sweep.h"
#include "test_support.h"

namespace promptrank {
namespace {

// Tags listed words as given and everything else as NN, so candidate sets
// are obvious by inspection.
class LexiconTagger final : public PosTagger {
 public:
  std::vector<std::string> Tag(std::span<const std::string> tokens) const override {
    static const std::map<std::string, std::string> lexicon{
        {"help", "VB"}, {"learn", "VB"}, {"drive", "VB"}, {"the", "DT"}, {".", "."}};
    std::vector<std::string> tags;
    for (const auto& t : tokens) {
      auto it = lexicon.find(t);
      tags.push_back(it == lexicon.end() ? "NN" : it->second);
    }
    return tags;
  }
};

Extractor LexiconExtractor(PipelineConfig cfg) {
  cfg.backend.family = "stub:constant=-1";
  cfg.scorer.alpha = 1.0;  // every p_c = -1, so position alone decides
  return Extractor(cfg, std::make_shared<LexiconTagger>(), LoadModel(cfg.backend));
}

const std::vector<CorpusRecord> kToyCorpus{
    {"d1", "graphs help ranking . the models learn", {"graphs", "learning"}},
    {"d2", "data drive systems", {"systems", "data", "theory"}},
};

std::vector<CorpusRecord> GeneratedCorpus(std::size_t n) {
  static const char* sentences[] = {
      "Keyphrase extraction selects representative phrases from a document.",
      "Neural language models assign probabilities to candidate phrases.",
      "The position of the first occurrence is a strong signal for long documents.",
      "Graph based ranking methods build word co-occurrence networks.",
      "Prompt templates condition the decoder on the source document.",
      "Evaluation uses precision, recall and F1 at several cutoffs.",
      "Stemming reduces inflected words to a common stem before matching.",
  };
  std::vector<CorpusRecord> out;
  for (std::size_t d = 0; d < n; ++d) {
    CorpusRecord r;
    r.id = "doc" + std::to_string(d);
    for (std::size_t s = 0; s < 3 + d % 4; ++s) r.text += std::string(sentences[(d * 3 + s) % 7]) + " ";
    r.gold = {"keyphrase extraction", "language models", "document", "prompt templates", "graph"};
    out.push_back(std::move(r));
  }
  return out;
}

TEST(PipelineConfig, DefaultsAndValidation) {
  PipelineConfig cfg;
  EXPECT_EQ(cfg.scorer.alpha, 0.6);
  EXPECT_EQ(cfg.ranker.gamma, 1.2e8);
  EXPECT_EQ(cfg.scorer.encoder_max_tokens, 512u);
  EXPECT_EQ(&BuiltinRegistry().Get(cfg.scorer.template_id), &BuiltinRegistry().Get("len5-default"));
  EXPECT_NO_THROW(cfg.Validate());
  cfg.workers = 0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.ks = {};
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
}

TEST(Extract, SingleNounPhraseRanksFirst) {
  const auto ex = testing::StubExtractor();
  const auto r = ex.Extract("The committee approved the budget.");
  ASSERT_FALSE(r.ranked.empty());
  const auto only = ex.Extract("Results improved.");
  ASSERT_EQ(only.ranked.size(), 1u);
  EXPECT_EQ(only.ranked[0].candidate.surface, "Results");
  EXPECT_EQ(only.ranked[0].rank, 1u);
}

TEST(Extract, DeterministicAcrossRuns) {
  const auto ex = testing::StubExtractor();
  const std::string text = GeneratedCorpus(3)[2].text;
  const auto a = ex.Extract(text);
  const auto b = ex.Extract(text);
  ASSERT_EQ(a.ranked.size(), b.ranked.size());
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    EXPECT_EQ(a.ranked[i].candidate, b.ranked[i].candidate);
    EXPECT_EQ(a.ranked[i].s_c, b.ranked[i].s_c);
  }
}

TEST(Extract, NoCandidatesIsADiagnostic) {
  const auto r = testing::StubExtractor().Extract("of the and , .");
  EXPECT_TRUE(r.ranked.empty());
  ASSERT_FALSE(r.diagnostics.empty());
}

TEST(Extract, VeryLongDocument) {
  const auto ex = testing::StubExtractor();
  std::string text;
  std::size_t words = 0;
  for (int i = 0; words < 10000; ++i) {
    text += "Topic" + std::to_string(i % 400) + " models improve retrieval quality. ";
    words += 5;
  }
  const auto prepared = ex.Prepare("long", text);
  EXPECT_EQ(prepared.doc.len_effective, 512u);
  const auto r = ex.Extract(text);
  EXPECT_EQ(r.ranked.size(), prepared.candidates.size());
  for (const auto& c : r.ranked) EXPECT_LE(c.r_c, 1.0 + Beta(512, kDefaultGamma));
}

TEST(Extract, PretaggedBypass) {
  const auto ex = testing::StubExtractor();
  const auto doc = ex.PrepareTagged("t", {{"efficient", "keyphrase", "extraction", "works"}, {"JJ", "NN", "NN", "VBZ"}});
  EXPECT_EQ(doc.text, "efficient keyphrase extraction works");
  ASSERT_EQ(doc.candidates.size(), 1u);
  auto session = ex.model().NewSession();
  EXPECT_EQ(ex.ExtractPrepared(doc, *session).ranked.at(0).candidate.surface, "efficient keyphrase extraction");
}

TEST(Extract, UnknownTemplateFailsAtConstruction) {
  PipelineConfig cfg;
  cfg.scorer.template_id = "len7-1";
  EXPECT_THROW(testing::StubExtractor(cfg), InputError);
}

TEST(RunCorpus, HandComputedToyCorpus) {
  PipelineConfig cfg;
  cfg.ks = {1, 5};
  const auto run = LexiconExtractor(cfg).RunCorpus(kToyCorpus);
  ASSERT_EQ(run.failures, 0u);
  ASSERT_EQ(run.documents[0].ranked.size(), 3u);
  EXPECT_EQ(run.documents[0].ranked[0].candidate.surface, "graphs");
  EXPECT_EQ(run.documents[0].ranked[2].candidate.surface, "models");
  // K=5: doc1 1 of 3 correct (gold 2), doc2 2 of 2 (gold 3).
  EXPECT_EQ(run.report.counts.at(5).correct, 3u);
  EXPECT_DOUBLE_EQ(run.report.per_k.at(5).precision, 0.6);
  EXPECT_DOUBLE_EQ(run.report.per_k.at(5).recall, 0.6);
  EXPECT_DOUBLE_EQ(run.report.per_k.at(5).f1, 0.6);
  // K=1: both top predictions are correct.
  EXPECT_DOUBLE_EQ(run.report.per_k.at(1).precision, 1.0);
  EXPECT_DOUBLE_EQ(run.report.per_k.at(1).recall, 0.4);
  EXPECT_NEAR(run.report.per_k.at(1).f1, 0.8 / 1.4, 1e-12);
}

TEST(RunCorpus, FilterAbsentGold) {
  PipelineConfig cfg;
  cfg.filter_absent_gold = true;
  const auto run = LexiconExtractor(cfg).RunCorpus(kToyCorpus);
  // "theory" never occurs; "learning" stems to "learn", which does.
  EXPECT_EQ(run.report.counts.at(5).gold, 4u);
}

TEST(RunCorpus, EmptyGoldEverywhere) {
  auto corpus = kToyCorpus;
  for (auto& r : corpus) r.gold.clear();
  const auto run = LexiconExtractor({}).RunCorpus(corpus);
  for (const auto& [k, s] : run.report.per_k) {
    EXPECT_EQ(s.recall, 0.0);
    EXPECT_EQ(s.f1, 0.0);
  }
}

TEST(RunCorpus, FailedDocumentIsRecordedAndSkipped) {
  PipelineConfig cfg;
  cfg.backend.family = "stub:fail_on_batch=0";
  const Extractor ex(cfg, testing::SharedTagger(), LoadModel(cfg.backend));
  const auto corpus = GeneratedCorpus(3);
  const auto run = ex.RunCorpus(corpus);
  EXPECT_EQ(run.failures, 1u);
  ASSERT_TRUE(run.documents[0].error);
  EXPECT_NE(run.documents[0].error->find("doc0"), std::string::npos);
  EXPECT_FALSE(run.documents[1].error);
  EXPECT_EQ(run.report.documents, 2u);
}

TEST(RunCorpus, EmptyCorpusRejected) {
  EXPECT_THROW(testing::StubExtractor().RunCorpus({}), std::invalid_argument);
}

std::string RunToString(std::size_t workers, std::size_t batch) {
  PipelineConfig cfg;
  cfg.workers = workers;
  cfg.scorer.batch_size = batch;
  const auto run = testing::StubExtractor(cfg).RunCorpus(GeneratedCorpus(24));
  std::ostringstream out;
  out << ToJson(run.report).dump() << '\n';
  WritePredictions(out, run.documents);
  return out.str();
}

TEST(RunCorpus, WorkerAndBatchInvariant) {
  const auto base = RunToString(1, 64);
  EXPECT_EQ(RunToString(8, 64), base);
  EXPECT_EQ(RunToString(8, 1), base);
  EXPECT_EQ(RunToString(3, 1), base);
}

TEST(ParallelForDocuments, VisitsEveryItemOnceAndRethrows) {
  const auto model = MakeStubModel();
  std::vector<int> seen(100, 0);
  ParallelForDocuments(seen.size(), 4, *model, [&](std::size_t i, Seq2SeqSession&) { ++seen[i]; });
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_THROW(ParallelForDocuments(10, 4, *model,
                                    [](std::size_t i, Seq2SeqSession&) {
                                      if (i == 7) throw std::runtime_error("boom");
                                    }),
               std::runtime_error);
}

TEST(Predictions, CachedEvaluationEqualsFreshRun) {
  for (bool filter : {false, true}) {
    PipelineConfig cfg;
    cfg.filter_absent_gold = filter;
    const auto corpus = GeneratedCorpus(10);
    const auto run = testing::StubExtractor(cfg).RunCorpus(corpus);
    std::stringstream file;
    WritePredictions(file, run.documents);
    const auto cached = ParsePredictions(file);
    ASSERT_EQ(cached.size(), corpus.size());
    EXPECT_EQ(cached[3], ToPredictionRecord(run.documents[3]));
    const auto report = EvaluatePredictions(cached, corpus, cfg.ks, cfg.averaging, filter);
    EXPECT_EQ(ToJson(report).dump(), ToJson(run.report).dump());
  }
}

TEST(Predictions, ParseErrorsAndMissingRecords) {
  std::istringstream bad("{\"id\":\"a\",\"ranked\":[]}\n{\"id\":\"b\"}\n");
  try {
    ParsePredictions(bad);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  const std::vector<PredictionRecord> preds{{"d1", {{"graphs", -1, 1, -1}}, std::nullopt}};
  EXPECT_THROW(EvaluatePredictions(preds, kToyCorpus, kDefaultKs), InputError);
}

TEST(Config, FormatRoundTrips) {
  PipelineConfig cfg;
  cfg.scorer.alpha = 0.30000000000000004;
  cfg.ranker.gamma = 3.5e7;
  cfg.ranker.use_position = false;
  cfg.ks = {5, 20};
  cfg.workers = 4;
  cfg.backend = {"bart", "/models/bart base"};
  cfg.averaging = Averaging::kMacro;
  cfg.filter_absent_gold = true;
  cfg.scorer.include_eos = true;
  cfg.scorer.template_id = "len2-1";
  const std::string text = FormatConfig(cfg);
  PipelineConfig back;
  std::istringstream in(text);
  ApplyConfig(back, in);
  EXPECT_EQ(FormatConfig(back), text);
  EXPECT_EQ(back.scorer.alpha, cfg.scorer.alpha);
  EXPECT_EQ(back.backend.weights, cfg.backend.weights);
  for (const auto key : ConfigKeys()) {
    EXPECT_NE(text.find(std::string(key) + " = "), std::string::npos) << key;
  }
}

TEST(Config, ErrorsNameTheProblem) {
  PipelineConfig cfg;
  std::istringstream unknown("alpha = 0.5\nbogus = 1\n");
  EXPECT_THROW(ApplyConfig(cfg, unknown), InputError);
  EXPECT_THROW(ApplyConfigValue(cfg, "alpha", "abc"), InputError);
  EXPECT_THROW(ApplyConfigValue(cfg, "ks", "5,,10"), InputError);
  EXPECT_THROW(ApplyConfigValue(cfg, "ks", "0"), InputError);
  EXPECT_THROW(ApplyConfigValue(cfg, "use_position", "maybe"), InputError);
  std::istringstream noeq("alpha 0.5\n");
  EXPECT_THROW(ApplyConfig(cfg, noeq), InputError);
  std::istringstream ok("# comment\n\n  ks = 5, 10  \n");
  ApplyConfig(cfg, ok);
  EXPECT_EQ(cfg.ks, (std::vector<std::size_t>{5, 10}));
}

TEST(Sweep, ExpandValues) {
  const auto alphas = ExpandSweepValues(SweepParameter::kAlpha, std::vector<std::string>{"0.2:1.0:0.1"});
  ASSERT_EQ(alphas.size(), 9u);
  EXPECT_EQ(alphas.front(), "0.2");
  EXPECT_EQ(alphas[1], "0.3");
  EXPECT_EQ(alphas.back(), "1");
  const auto tmpl = ExpandSweepValues(SweepParameter::kTemplate, std::vector<std::string>{"len0", "len2", "default"});
  EXPECT_EQ(tmpl.size(), 6u);
  EXPECT_THROW(ExpandSweepValues(SweepParameter::kGamma, std::vector<std::string>{"1:2"}), InputError);
  EXPECT_THROW(ExpandSweepValues(SweepParameter::kGamma, std::vector<std::string>{"2:1:0.5"}), InputError);
  EXPECT_THROW(ParseSweepParameter("beta"), InputError);
}

TEST(Sweep, AlphaCellsEqualFreshRuns) {
  const auto corpus = GeneratedCorpus(6);
  const std::vector<SweepDataset> ds{{"toy", corpus}};
  const auto ex = testing::StubExtractor();
  const auto values = ExpandSweepValues(SweepParameter::kAlpha, std::vector<std::string>{"0.2:1.0:0.1"});
  const auto rows = RunSweep(ex, SweepParameter::kAlpha, values, ds, kDefaultKs);
  ASSERT_EQ(rows.size(), 9u * 3u);
  for (const std::size_t v : {0u, 4u, 8u}) {
    PipelineConfig cfg;
    cfg.scorer.alpha = std::stod(values[v]);
    const auto fresh = testing::StubExtractor(cfg).RunCorpus(corpus).report;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& row = rows[v * 3 + i];
      ASSERT_TRUE(row.scores);
      EXPECT_EQ(row.value, values[v]);
      EXPECT_EQ(row.scores->f1, fresh.per_k.at(row.k).f1);
    }
  }
}

TEST(Sweep, GammaAndTemplateCells) {
  const std::vector<SweepDataset> ds{{"a", GeneratedCorpus(4)}, {"b", GeneratedCorpus(2)}};
  const auto ex = testing::StubExtractor();
  const std::vector<std::size_t> ks{5};
  const auto gamma = RunSweep(ex, SweepParameter::kGamma, std::vector<std::string>{"1e7"}, ds, ks);
  ASSERT_EQ(gamma.size(), 2u);
  EXPECT_EQ(gamma[1].dataset, "b");

  PipelineConfig cfg;
  cfg.scorer.template_id = "len2-3";
  const auto fresh = testing::StubExtractor(cfg).RunCorpus(ds[0].records).report;
  const auto rows =
      RunSweep(ex, SweepParameter::kTemplate, std::vector<std::string>{"len2-3", "nope", "len0-1"}, ds, ks);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].scores->f1, fresh.per_k.at(5).f1);
  EXPECT_FALSE(rows[1].scores);
  EXPECT_FALSE(rows[1].error.empty());
  EXPECT_TRUE(rows[2].scores);

  std::ostringstream csv;
  WriteSweepCsv(csv, rows);
  std::istringstream lines(csv.str());
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(header, "value,dataset,k,precision,recall,f1");
  EXPECT_EQ(first.rfind("len2-3,a,5,", 0), 0u);
  EXPECT_EQ(second, "nope,a,5,failed,failed,failed");
}

TEST(Sweep, InvalidValueMarksCellAndContinues) {
  const std::vector<SweepDataset> ds{{"a", GeneratedCorpus(2)}};
  const std::vector<std::size_t> ks{5};
  const auto rows =
      RunSweep(testing::StubExtractor(), SweepParameter::kAlpha, std::vector<std::string>{"-1", "x", "0.5"}, ds, ks);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].scores);
  EXPECT_FALSE(rows[1].scores);
  EXPECT_TRUE(rows[2].scores);
}

}  // namespace
}  // namespace promptrank
