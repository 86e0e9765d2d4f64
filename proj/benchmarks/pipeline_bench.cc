#include <random>
#include <string>

#include <benchmark/benchmark.h>

#include "promptrank/candidates.h"
#include "promptrank/pipeline.h"
#include "promptrank/porter_stemmer.h"
#include "promptrank/scorer.h"
#include "promptrank/stub_backend.h"

namespace pr = promptrank;

namespace {

pr::TaggedDocument RandomDocument(std::size_t n) {
  static const char* tags[] = {"NN", "NNS", "JJ", "DT", "VBZ", "IN", "NNP"};
  std::mt19937_64 rng(1);
  std::vector<std::string> tokens, tg;
  for (std::size_t i = 0; i < n; ++i) {
    tokens.push_back("w" + std::to_string(rng() % 300));
    tg.push_back(tags[rng() % 7]);
  }
  return pr::MakeTaggedDocument(std::move(tokens), std::move(tg));
}

std::string Text(std::size_t sentences) {
  std::string text;
  for (std::size_t i = 0; i < sentences; ++i) {
    text += "Neural keyphrase model " + std::to_string(i % 40) +
            " ranks candidate phrases with prompt based probabilities. ";
  }
  return text;
}

void BM_ExtractCandidates(benchmark::State& state) {
  const auto doc = RandomDocument(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pr::ExtractCandidates(doc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExtractCandidates)->Arg(128)->Arg(512)->Arg(4096);

void BM_PorterStem(benchmark::State& state) {
  const std::vector<std::string> words{"caresses", "relational", "generalizations", "hopefully", "probabilities",
                                       "extraction", "conditional", "ranking", "documents", "sky"};
  for (auto _ : state) {
    for (const auto& w : words) benchmark::DoNotOptimize(pr::PorterStem(w));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(words.size()));
}
BENCHMARK(BM_PorterStem);

void BM_StubScoreDocument(benchmark::State& state) {
  pr::PipelineConfig cfg;
  cfg.backend.family = "stub";
  cfg.scorer.batch_size = static_cast<std::size_t>(state.range(0));
  const pr::Extractor ex(cfg);
  const auto doc = ex.Prepare("bench", Text(20));
  const auto& tmpl = ex.ResolveTemplate("default");
  auto session = ex.model().NewSession();
  for (auto _ : state) benchmark::DoNotOptimize(ex.Score(doc, tmpl, *session, cfg.scorer));
  state.counters["candidates"] = static_cast<double>(doc.candidates.size());
}
BENCHMARK(BM_StubScoreDocument)->Arg(1)->Arg(32);

void BM_TinyT5ScoreDocument(benchmark::State& state) {
  pr::PipelineConfig cfg;
  cfg.backend = {"t5", PROMPTRANK_BENCH_T5};
  cfg.scorer.batch_size = static_cast<std::size_t>(state.range(0));
  const pr::Extractor ex(cfg);
  const auto doc = ex.Prepare("bench", Text(8));
  const auto& tmpl = ex.ResolveTemplate("default");
  auto session = ex.model().NewSession();
  for (auto _ : state) benchmark::DoNotOptimize(ex.Score(doc, tmpl, *session, cfg.scorer));
  state.counters["candidates"] = static_cast<double>(doc.candidates.size());
}
BENCHMARK(BM_TinyT5ScoreDocument)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
