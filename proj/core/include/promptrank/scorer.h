#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptrank/backend.h"
#include "promptrank/candidates.h"
#include "promptrank/prompt_template.h"

namespace promptrank {

struct ScorerConfig {
  double alpha = 0.6;                    // length-normalisation exponent
  std::size_t encoder_max_tokens = 512;  // subword cap on the encoder input
  std::size_t batch_size = 32;           // candidates per decoder batch
  std::string template_id = std::string(kDefaultTemplateId);
  // Count the end-of-sequence token as part of the candidate span.
  bool include_eos = false;

  // Throws std::invalid_argument on alpha <= 0 or a zero cap/batch size.
  void Validate() const;
};

// What the scorer sends to the model for one candidate.
struct BackendRequest {
  std::vector<TokenId> encoder_token_ids;
  std::vector<TokenId> decoder_token_ids;  // start markers + prefix + candidate
};

// Position of the candidate inside the decoder id sequence.
struct TokenSpan {
  std::size_t start = 0;   // j
  std::size_t length = 0;  // l_c
};

struct CandidateLogProbs {
  std::vector<double> token_logprobs;  // log p(y_i | y_<i), i = j .. j + l_c - 1
  std::size_t start_index_j = 0;
  std::size_t candidate_token_len_lc = 0;
};

// j is the length of the longest common prefix of the two id sequences
// (equal to |prefix_ids| unless the tokenizer merges across the boundary);
// l_c = |full_ids| - j. Throws BackendError if `full_ids` is shorter than
// `prefix_ids`.
TokenSpan LocateCandidateTokens(std::span<const TokenId> prefix_ids, std::span<const TokenId> full_ids);

// Tokenizes prefix and prefix + candidate; `start_offset` counts decoder
// start markers placed before both. Throws std::invalid_argument on an
// empty candidate.
TokenSpan LocateCandidateTokens(std::string_view prefix, std::string_view candidate,
                                const SubwordTokenizer& tokenizer, std::size_t start_offset = 0);

// p_c = (sum of token log-probs) / l_c^alpha.
double ScoreCandidate(const CandidateLogProbs& logprobs, double alpha);

BackendRequest BuildRequest(const Seq2SeqModel& model, const PromptTemplate& tmpl, std::string_view doc_text,
                            std::string_view candidate_surface, const ScorerConfig& cfg);

struct DocumentLogProbs {
  // Parallel to the candidate list; nullopt for candidates whose decoder
  // tokenization is empty (they are excluded from ranking).
  std::vector<std::optional<CandidateLogProbs>> per_candidate;
  std::vector<std::string> warnings;
};

// Encodes the document once, prefills the shared decoder prefix once, then
// decodes candidates in batches of cfg.batch_size. Backend failures are
// rethrown as BackendError naming `doc_id` and the batch index.
DocumentLogProbs CollectLogProbs(std::string_view doc_text, std::span<const Candidate> candidates,
                                 const PromptTemplate& tmpl, const Seq2SeqModel& model, Seq2SeqSession& session,
                                 const ScorerConfig& cfg, std::string_view doc_id = {});

// p_c per candidate (nullopt where skipped).
std::vector<std::optional<double>> ScoreDocument(std::string_view doc_text, std::span<const Candidate> candidates,
                                                 const PromptTemplate& tmpl, const Seq2SeqModel& model,
                                                 Seq2SeqSession& session, const ScorerConfig& cfg,
                                                 std::string_view doc_id = {});

}  // namespace promptrank
