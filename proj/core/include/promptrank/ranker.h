#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "promptrank/candidates.h"
#include "promptrank/preprocess.h"

namespace promptrank {

inline constexpr double kDefaultGamma = 1.2e8;

struct RankerConfig {
  double gamma = kDefaultGamma;
  bool use_position = true;  // off: r_c = 1 for every candidate
  std::size_t top_k = 15;    // leading entries flagged as predictions

  // Throws std::invalid_argument unless gamma > 0 and top_k >= 1.
  void Validate() const;
};

struct ScoredCandidate {
  Candidate candidate;
  double p_c = 0.0;
  double r_c = 1.0;
  double s_c = 0.0;
  std::size_t rank = 0;  // 1-based
  bool is_prediction = false;
};

// beta = gamma / len^3. Throws std::invalid_argument on len 0.
double Beta(std::size_t len_effective, double gamma);

// r_c = pos / len + beta.
double PositionPenalty(std::size_t pos, std::size_t len_effective, double beta);

// s_c = r_c * p_c.
double FinalScore(double p_c, double r_c);

struct CandidateScore {
  Candidate candidate;
  double p_c = 0.0;
};

// Sorts by s_c descending; ties go to the smaller first_pos, then the
// lexicographically smaller normalized form.
std::vector<ScoredCandidate> Rank(std::span<const CandidateScore> scored, const TaggedDocument& doc,
                                  const RankerConfig& cfg);

}  // namespace promptrank
