#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "promptrank/preprocess.h"

namespace promptrank {

// A noun-phrase candidate. first_pos is the 0-based word index of the first
// token of its earliest occurrence.
struct Candidate {
  std::string surface;     // original tokens of the first occurrence, space-joined
  std::string normalized;  // lowercase(surface)
  std::size_t first_pos = 0;
  std::size_t word_len = 0;

  bool operator==(const Candidate&) const = default;
};

bool IsNounTag(std::string_view tag);       // NN.*
bool IsAdjectiveTag(std::string_view tag);  // JJ

// Greedy-maximal matches of <NN.*|JJ>*<NN.*> over the tag sequence: every
// maximal run of NN.*/JJ tokens yields the span from the run start up to
// its last NN.* token. Duplicates (by normalized form) keep the earliest
// occurrence; output is ordered by first_pos. `max_word_len` of 0 keeps
// candidates of any length.
std::vector<Candidate> ExtractCandidates(const TaggedDocument& doc, std::size_t max_word_len = 0);

// min(first_pos, len_effective - 1).
std::size_t ClampPosition(const Candidate& c, const TaggedDocument& doc);

}  // namespace promptrank
