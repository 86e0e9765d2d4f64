#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptrank/backend.h"
#include "promptrank/candidates.h"
#include "promptrank/corpus.h"
#include "promptrank/evaluation.h"
#include "promptrank/pos_tagger.h"
#include "promptrank/preprocess.h"
#include "promptrank/prompt_template.h"
#include "promptrank/ranker.h"
#include "promptrank/scorer.h"

namespace promptrank {

// Path baked in at build time for the bundled tagger weights.
std::filesystem::path DefaultTaggerWeightsPath();

struct PipelineConfig {
  ScorerConfig scorer;  // holds alpha, encoder cap, batch size, template id
  RankerConfig ranker;
  std::filesystem::path tagger_weights;  // empty: DefaultTaggerWeightsPath()
  std::filesystem::path templates_file;  // empty: built-in registry only
  BackendSpec backend;
  std::size_t workers = 1;
  std::size_t position_cap = kDefaultPositionCap;
  std::size_t max_candidate_words = 0;  // 0: unlimited
  // Evaluation protocol.
  std::vector<std::size_t> ks = kDefaultKs;
  Averaging averaging = Averaging::kMicro;
  bool filter_absent_gold = false;  // drop gold phrases that never occur in the text

  // Throws std::invalid_argument on any invalid nested setting.
  void Validate() const;
};

// Tagging and candidate extraction, independent of the language model.
struct PreparedDocument {
  std::string id;
  std::string text;
  TaggedDocument doc;
  std::vector<Candidate> candidates;
};

// Ranked output for one document.
struct ExtractionResult {
  std::vector<ScoredCandidate> ranked;
  std::vector<std::string> diagnostics;
};

struct DocumentOutcome {
  std::string id;
  std::vector<ScoredCandidate> ranked;
  std::vector<std::string> diagnostics;
  std::optional<std::string> error;  // set when the document failed
};

struct CorpusRun {
  std::vector<DocumentOutcome> documents;  // corpus order
  EvalReport report;                       // failed documents excluded
  std::size_t failures = 0;
};

// Loaded pipeline components. Immutable and shareable across threads; each
// worker gets its own model session.
class Extractor {
 public:
  // Loads tagger, templates and model as configured.
  explicit Extractor(PipelineConfig cfg);
  // Uses the supplied components (e.g. a stub model in tests).
  Extractor(PipelineConfig cfg, std::shared_ptr<const PosTagger> tagger, std::shared_ptr<const Seq2SeqModel> model);

  const PipelineConfig& config() const { return cfg_; }
  const Seq2SeqModel& model() const { return *model_; }
  const PromptTemplate& ResolveTemplate(std::string_view id) const;

  PreparedDocument Prepare(std::string id, std::string text) const;
  // Bypasses tokenization and tagging; the encoder sees the tokens joined
  // by single spaces.
  PreparedDocument PrepareTagged(std::string id, const PretaggedDocument& tagged) const;
  DocumentLogProbs Score(const PreparedDocument& doc, const PromptTemplate& tmpl, Seq2SeqSession& session,
                         const ScorerConfig& scorer) const;
  // Length-normalizes cached log-probs with `alpha`, then ranks.
  ExtractionResult RankScored(const PreparedDocument& doc, const DocumentLogProbs& lp, double alpha,
                              const RankerConfig& ranker) const;

  ExtractionResult Extract(std::string_view text) const;
  ExtractionResult Extract(std::string_view text, Seq2SeqSession& session) const;
  ExtractionResult ExtractPrepared(const PreparedDocument& doc, Seq2SeqSession& session) const;

  CorpusRun RunCorpus(std::span<const CorpusRecord> corpus) const;

  // Normalized gold per record, filtered when cfg.filter_absent_gold is set.
  std::vector<std::string> NormalizedGold(const CorpusRecord& record, const PreparedDocument& doc) const;

 private:
  PipelineConfig cfg_;
  std::shared_ptr<const PosTagger> tagger_;
  std::shared_ptr<const Seq2SeqModel> model_;
  TemplateRegistry user_templates_;
};

// Normalized, de-duplicated gold phrases. Blank entries are dropped; with
// `filter_absent` set, so is every phrase whose stemmed words never occur
// contiguously in `doc_tokens`.
std::vector<std::string> NormalizeGold(std::span<const std::string> gold, std::span<const std::string> doc_tokens,
                                       bool filter_absent);

// Normalized, de-duplicated phrases of a ranking, in rank order.
std::vector<std::string> NormalizedPredictions(std::span<const ScoredCandidate> ranked);

// Runs fn(item_index, session) for every item on `workers` threads, each
// with its own session. The first exception thrown stops the remaining
// work and is rethrown after all threads join.
void ParallelForDocuments(std::size_t items, std::size_t workers, const Seq2SeqModel& model,
                          const std::function<void(std::size_t, Seq2SeqSession&)>& fn);

// One-shot convenience: load everything from `cfg` and extract.
std::vector<ScoredCandidate> ExtractKeyphrases(std::string_view text, const PipelineConfig& cfg);

}  // namespace promptrank
