#include "promptrank/scorer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "promptrank/errors.h"

namespace promptrank {

void ScorerConfig::Validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("scorer: alpha must be > 0");
  if (encoder_max_tokens < 1) throw std::invalid_argument("scorer: encoder_max_tokens must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("scorer: batch_size must be >= 1");
}

TokenSpan LocateCandidateTokens(std::span<const TokenId> prefix_ids, std::span<const TokenId> full_ids) {
  if (full_ids.size() < prefix_ids.size()) {
    throw BackendError("backend inconsistency: prefix + candidate tokenizes to " + std::to_string(full_ids.size()) +
                       " ids, fewer than the prefix alone (" + std::to_string(prefix_ids.size()) + ")");
  }
  const auto mismatch = std::mismatch(prefix_ids.begin(), prefix_ids.end(), full_ids.begin());
  const auto j = static_cast<std::size_t>(mismatch.first - prefix_ids.begin());
  return {j, full_ids.size() - j};
}

TokenSpan LocateCandidateTokens(std::string_view prefix, std::string_view candidate,
                                const SubwordTokenizer& tokenizer, std::size_t start_offset) {
  if (candidate.empty()) throw std::invalid_argument("LocateCandidateTokens: empty candidate");
  const auto prefix_ids = tokenizer.Encode(prefix);
  std::string full(prefix);
  full.append(candidate);
  const auto full_ids = tokenizer.Encode(full);
  TokenSpan span = LocateCandidateTokens(prefix_ids, full_ids);
  span.start += start_offset;
  return span;
}

double ScoreCandidate(const CandidateLogProbs& logprobs, double alpha) {
  double sum = 0.0;
  for (double lp : logprobs.token_logprobs) sum += lp;
  const auto len = static_cast<double>(logprobs.candidate_token_len_lc);
  return sum / std::pow(len, alpha);
}

BackendRequest BuildRequest(const Seq2SeqModel& model, const PromptTemplate& tmpl, std::string_view doc_text,
                            std::string_view candidate_surface, const ScorerConfig& cfg) {
  BackendRequest req;
  req.encoder_token_ids = model.EncoderInput(tmpl.RenderEncoder(doc_text), cfg.encoder_max_tokens);
  req.decoder_token_ids = model.DecoderStart();
  const auto body = model.tokenizer().Encode(tmpl.RenderDecoder(candidate_surface));
  req.decoder_token_ids.insert(req.decoder_token_ids.end(), body.begin(), body.end());
  if (cfg.include_eos) req.decoder_token_ids.push_back(model.eos_id());
  return req;
}

DocumentLogProbs CollectLogProbs(std::string_view doc_text, std::span<const Candidate> candidates,
                                 const PromptTemplate& tmpl, const Seq2SeqModel& model, Seq2SeqSession& session,
                                 const ScorerConfig& cfg, std::string_view doc_id) {
  cfg.Validate();
  DocumentLogProbs result;
  result.per_candidate.resize(candidates.size());
  if (candidates.empty()) return result;

  const SubwordTokenizer& tok = model.tokenizer();
  std::vector<TokenId> prefix_ids = model.DecoderStart();
  {
    const auto body = tok.Encode(tmpl.DecoderPrefix());
    prefix_ids.insert(prefix_ids.end(), body.begin(), body.end());
  }

  struct Pending {
    std::size_t index;
    std::vector<TokenId> ids;  // full decoder sequence
    TokenSpan span;
  };
  std::vector<Pending> pending;
  pending.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    BackendRequest req;
    req.decoder_token_ids = model.DecoderStart();
    const auto body = tok.Encode(tmpl.RenderDecoder(candidates[i].surface));
    req.decoder_token_ids.insert(req.decoder_token_ids.end(), body.begin(), body.end());
    TokenSpan span = LocateCandidateTokens(prefix_ids, req.decoder_token_ids);
    if (span.length == 0) {
      result.warnings.push_back("candidate \"" + candidates[i].surface + "\" has an empty tokenization; skipped");
      continue;
    }
    if (span.start == 0) throw BackendError("model declares no decoder start marker");
    if (cfg.include_eos) {
      req.decoder_token_ids.push_back(model.eos_id());
      ++span.length;
    }
    pending.push_back({i, std::move(req.decoder_token_ids), span});
  }
  if (pending.empty()) return result;

  auto wrap = [&](std::size_t batch, const char* stage, const std::exception& e) {
    return BackendError("document " + std::string(doc_id.empty() ? "<unnamed>" : doc_id) + ", batch " +
                        std::to_string(batch) + " (" + stage + "): " + e.what());
  };

  // Every candidate sequence agrees with prefix_ids on [0, min_j); the row
  // predicting token j comes from input position j - 1, so the shared
  // prefill stops one token earlier.
  std::size_t min_j = pending.front().span.start;
  for (const auto& p : pending) min_j = std::min(min_j, p.span.start);
  const std::size_t shared = min_j == 0 ? 0 : min_j - 1;

  std::unique_ptr<EncoderState> enc;
  std::unique_ptr<DecoderPrefixState> prefix_state;
  try {
    const auto enc_ids = model.EncoderInput(tmpl.RenderEncoder(doc_text), cfg.encoder_max_tokens);
    enc = session.Encode(enc_ids);
    prefix_state = session.Prefill(*enc, std::span<const TokenId>(prefix_ids).first(shared));
  } catch (const std::exception& e) {
    throw wrap(0, "encode", e);
  }

  for (std::size_t b = 0, batch = 0; b < pending.size(); b += cfg.batch_size, ++batch) {
    const std::size_t end = std::min(pending.size(), b + cfg.batch_size);
    std::vector<std::vector<TokenId>> continuations;
    continuations.reserve(end - b);
    for (std::size_t k = b; k < end; ++k) {
      const auto& ids = pending[k].ids;
      // Inputs shared..n-2 predict tokens shared+1..n-1.
      continuations.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(shared), ids.end() - 1);
    }
    std::vector<LogProbRows> rows;
    try {
      rows = session.DecodeBatch(*enc, *prefix_state, continuations);
    } catch (const std::exception& e) {
      throw wrap(batch, "decode", e);
    }
    if (rows.size() != continuations.size()) throw BackendError("backend returned a wrong number of row blocks");

    for (std::size_t k = b; k < end; ++k) {
      const Pending& p = pending[k];
      const LogProbRows& r = rows[k - b];
      CandidateLogProbs lp;
      lp.start_index_j = p.span.start;
      lp.candidate_token_len_lc = p.span.length;
      lp.token_logprobs.reserve(p.span.length);
      for (std::size_t pos = p.span.start; pos < p.span.start + p.span.length; ++pos) {
        const std::size_t row = pos - 1 - shared;
        if (row >= r.rows()) throw BackendError("backend returned too few decoder rows");
        lp.token_logprobs.push_back(static_cast<double>(r.at(row, p.ids[pos])));
      }
      result.per_candidate[p.index] = std::move(lp);
    }
  }
  return result;
}

std::vector<std::optional<double>> ScoreDocument(std::string_view doc_text, std::span<const Candidate> candidates,
                                                 const PromptTemplate& tmpl, const Seq2SeqModel& model,
                                                 Seq2SeqSession& session, const ScorerConfig& cfg,
                                                 std::string_view doc_id) {
  const auto collected = CollectLogProbs(doc_text, candidates, tmpl, model, session, cfg, doc_id);
  std::vector<std::optional<double>> scores;
  scores.reserve(collected.per_candidate.size());
  for (const auto& lp : collected.per_candidate) {
    scores.push_back(lp ? std::optional<double>(ScoreCandidate(*lp, cfg.alpha)) : std::nullopt);
  }
  return scores;
}

}  // namespace promptrank
