#include "promptrank/ranker.h"

#include <algorithm>
#include <stdexcept>

namespace promptrank {

void RankerConfig::Validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
}

double Beta(std::size_t len_effective, double gamma) {
  if (len_effective == 0) throw std::invalid_argument("document length must be >= 1");
  const double len = static_cast<double>(len_effective);
  return gamma / (len * len * len);
}

double PositionPenalty(std::size_t pos, std::size_t len_effective, double beta) {
  if (len_effective == 0) throw std::invalid_argument("document length must be >= 1");
  return static_cast<double>(pos) / static_cast<double>(len_effective) + beta;
}

double FinalScore(double p_c, double r_c) { return r_c * p_c; }

std::vector<ScoredCandidate> Rank(std::span<const CandidateScore> scored, const TaggedDocument& doc,
                                  const RankerConfig& cfg) {
  cfg.Validate();
  std::vector<ScoredCandidate> out;
  if (scored.empty()) return out;
  const std::size_t len = std::max<std::size_t>(doc.len_effective, 1);
  const double beta = cfg.use_position ? Beta(len, cfg.gamma) : 0.0;
  out.reserve(scored.size());
  for (const auto& s : scored) {
    ScoredCandidate c;
    c.candidate = s.candidate;
    c.p_c = s.p_c;
    c.r_c = cfg.use_position ? PositionPenalty(ClampPosition(s.candidate, doc), len, beta) : 1.0;
    c.s_c = FinalScore(c.p_c, c.r_c);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.s_c != b.s_c) return a.s_c > b.s_c;
    if (a.candidate.first_pos != b.candidate.first_pos) return a.candidate.first_pos < b.candidate.first_pos;
    return a.candidate.normalized < b.candidate.normalized;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rank = i + 1;
    out[i].is_prediction = i < cfg.top_k;
  }
  return out;
}

}  // namespace promptrank
