#include "promptrank/pipeline.h"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "promptrank/errors.h"
#include "promptrank/porter_stemmer.h"
#include "promptrank/utf8.h"

namespace promptrank {

std::filesystem::path DefaultTaggerWeightsPath() {
  const std::filesystem::path build_tree = PROMPTRANK_DEFAULT_TAGGER_WEIGHTS;
  if (std::filesystem::exists(build_tree)) return build_tree;
  const std::filesystem::path installed = PROMPTRANK_INSTALLED_TAGGER_WEIGHTS;
  if (std::filesystem::exists(installed)) return installed;
  return build_tree;
}

void PipelineConfig::Validate() const {
  scorer.Validate();
  ranker.Validate();
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (position_cap < 1) throw std::invalid_argument("position cap must be >= 1");
  if (ks.empty()) throw std::invalid_argument("at least one cutoff K is required");
  for (std::size_t k : ks) {
    if (k == 0) throw std::invalid_argument("cutoff K must be >= 1");
  }
}

namespace {

std::shared_ptr<const PosTagger> LoadTagger(const PipelineConfig& cfg) {
  const auto path = cfg.tagger_weights.empty() ? DefaultTaggerWeightsPath() : cfg.tagger_weights;
  return std::make_shared<const PerceptronTagger>(PerceptronTagger::Load(path));
}

}  // namespace

Extractor::Extractor(PipelineConfig cfg)
    : Extractor(cfg, LoadTagger(cfg), LoadModel(cfg.backend)) {}

Extractor::Extractor(PipelineConfig cfg, std::shared_ptr<const PosTagger> tagger,
                     std::shared_ptr<const Seq2SeqModel> model)
    : cfg_(std::move(cfg)), tagger_(std::move(tagger)), model_(std::move(model)) {
  cfg_.Validate();
  if (!tagger_ || !model_) throw std::invalid_argument("Extractor needs a tagger and a model");
  if (!cfg_.templates_file.empty()) user_templates_ = LoadTemplates(cfg_.templates_file);
  ResolveTemplate(cfg_.scorer.template_id);  // fail early on an unknown id
}

const PromptTemplate& Extractor::ResolveTemplate(std::string_view id) const {
  if (const PromptTemplate* t = user_templates_.Find(id)) return *t;
  return BuiltinRegistry().Get(id);
}

PreparedDocument Extractor::Prepare(std::string id, std::string text) const {
  PreparedDocument p;
  p.id = std::move(id);
  p.doc = Preprocess(text, *tagger_, cfg_.position_cap);
  p.candidates = ExtractCandidates(p.doc, cfg_.max_candidate_words);
  p.text = std::move(text);
  return p;
}

PreparedDocument Extractor::PrepareTagged(std::string id, const PretaggedDocument& tagged) const {
  PreparedDocument p;
  p.id = std::move(id);
  for (const auto& t : tagged.tokens) {
    if (!p.text.empty()) p.text += ' ';
    p.text += t;
  }
  p.doc = MakeTaggedDocument(tagged.tokens, tagged.tags, cfg_.position_cap);
  p.candidates = ExtractCandidates(p.doc, cfg_.max_candidate_words);
  return p;
}

DocumentLogProbs Extractor::Score(const PreparedDocument& doc, const PromptTemplate& tmpl, Seq2SeqSession& session,
                                  const ScorerConfig& scorer) const {
  return CollectLogProbs(doc.text, doc.candidates, tmpl, *model_, session, scorer, doc.id);
}

ExtractionResult Extractor::RankScored(const PreparedDocument& doc, const DocumentLogProbs& lp, double alpha,
                                       const RankerConfig& ranker) const {
  ExtractionResult out;
  out.diagnostics = lp.warnings;
  if (doc.candidates.empty()) {
    out.diagnostics.push_back("no candidates found");
    return out;
  }
  std::vector<CandidateScore> scored;
  scored.reserve(doc.candidates.size());
  for (std::size_t i = 0; i < doc.candidates.size(); ++i) {
    if (i < lp.per_candidate.size() && lp.per_candidate[i]) {
      scored.push_back({doc.candidates[i], ScoreCandidate(*lp.per_candidate[i], alpha)});
    }
  }
  out.ranked = Rank(scored, doc.doc, ranker);
  return out;
}

ExtractionResult Extractor::Extract(std::string_view text) const {
  auto session = model_->NewSession();
  return Extract(text, *session);
}

ExtractionResult Extractor::Extract(std::string_view text, Seq2SeqSession& session) const {
  return ExtractPrepared(Prepare("", std::string(text)), session);
}

ExtractionResult Extractor::ExtractPrepared(const PreparedDocument& doc, Seq2SeqSession& session) const {
  DocumentLogProbs lp;
  if (!doc.candidates.empty()) lp = Score(doc, ResolveTemplate(cfg_.scorer.template_id), session, cfg_.scorer);
  return RankScored(doc, lp, cfg_.scorer.alpha, cfg_.ranker);
}

std::vector<std::string> Extractor::NormalizedGold(const CorpusRecord& record, const PreparedDocument& doc) const {
  return NormalizeGold(record.gold, doc.doc.tokens, cfg_.filter_absent_gold);
}

CorpusRun Extractor::RunCorpus(std::span<const CorpusRecord> corpus) const {
  if (corpus.empty()) throw std::invalid_argument("corpus is empty");
  CorpusRun run;
  run.documents.resize(corpus.size());
  std::vector<std::vector<std::string>> gold(corpus.size());
  const PromptTemplate& tmpl = ResolveTemplate(cfg_.scorer.template_id);

  ParallelForDocuments(corpus.size(), cfg_.workers, *model_, [&](std::size_t i, Seq2SeqSession& session) {
    DocumentOutcome& out = run.documents[i];
    out.id = corpus[i].id;
    try {
      const PreparedDocument doc = Prepare(corpus[i].id, corpus[i].text);
      DocumentLogProbs lp;
      if (!doc.candidates.empty()) lp = Score(doc, tmpl, session, cfg_.scorer);
      ExtractionResult r = RankScored(doc, lp, cfg_.scorer.alpha, cfg_.ranker);
      out.ranked = std::move(r.ranked);
      out.diagnostics = std::move(r.diagnostics);
      gold[i] = NormalizedGold(corpus[i], doc);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  std::vector<std::vector<std::string>> predictions;
  std::vector<std::vector<std::string>> kept_gold;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (run.documents[i].error) {
      ++run.failures;
      continue;
    }
    predictions.push_back(NormalizedPredictions(run.documents[i].ranked));
    kept_gold.push_back(std::move(gold[i]));
  }
  run.report = Evaluate(predictions, kept_gold, cfg_.ks, cfg_.averaging);
  return run;
}

std::vector<std::string> NormalizeGold(std::span<const std::string> gold, std::span<const std::string> doc_tokens,
                                       bool filter_absent) {
  std::vector<std::string> words;
  if (filter_absent) {
    words.reserve(doc_tokens.size());
    for (const auto& t : doc_tokens) words.push_back(PorterStem(utf8::ToLowerAscii(t)));
  }
  std::vector<std::string> out;
  for (const auto& g : gold) {
    const bool blank = std::all_of(g.begin(), g.end(), [](unsigned char c) { return std::isspace(c) != 0; });
    if (blank) continue;
    std::string norm = NormalizePhrase(g);
    if (filter_absent && !PhraseOccursIn(norm, words)) continue;
    out.push_back(std::move(norm));
  }
  return DedupPreservingOrder(out);
}

std::vector<std::string> NormalizedPredictions(std::span<const ScoredCandidate> ranked) {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(NormalizePhrase(r.candidate.surface));
  return DedupPreservingOrder(out);
}

void ParallelForDocuments(std::size_t items, std::size_t workers, const Seq2SeqModel& model,
                          const std::function<void(std::size_t, Seq2SeqSession&)>& fn) {
  if (items == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, items);
  if (workers == 1) {
    auto session = model.NewSession();
    for (std::size_t i = 0; i < items; ++i) fn(i, *session);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      try {
        auto session = model.NewSession();
        for (std::size_t i; (i = next.fetch_add(1)) < items;) fn(i, *session);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(items);
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<ScoredCandidate> ExtractKeyphrases(std::string_view text, const PipelineConfig& cfg) {
  return Extractor(cfg).Extract(text).ranked;
}

}  // namespace promptrank
