#include "promptrank/candidates.h"

#include <algorithm>
#include <unordered_set>

#include "promptrank/utf8.h"

namespace promptrank {

bool IsNounTag(std::string_view tag) { return tag.starts_with("NN"); }
bool IsAdjectiveTag(std::string_view tag) { return tag == "JJ"; }

std::vector<Candidate> ExtractCandidates(const TaggedDocument& doc, std::size_t max_word_len) {
  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  const std::size_t n = doc.tags.size();
  std::size_t i = 0;
  while (i < n) {
    if (!IsNounTag(doc.tags[i]) && !IsAdjectiveTag(doc.tags[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::size_t last_noun = n;
    while (i < n && (IsNounTag(doc.tags[i]) || IsAdjectiveTag(doc.tags[i]))) {
      if (IsNounTag(doc.tags[i])) last_noun = i;
      ++i;
    }
    if (last_noun == n) continue;

    const std::size_t len = last_noun - start + 1;
    if (max_word_len != 0 && len > max_word_len) continue;
    Candidate c;
    for (std::size_t k = start; k <= last_noun; ++k) {
      if (k > start) c.surface.push_back(' ');
      c.surface += doc.tokens[k];
    }
    c.normalized = utf8::ToLowerAscii(c.surface);
    c.first_pos = start;
    c.word_len = len;
    if (seen.insert(c.normalized).second) out.push_back(std::move(c));
  }
  return out;
}

std::size_t ClampPosition(const Candidate& c, const TaggedDocument& doc) {
  if (doc.len_effective == 0) return 0;
  return std::min(c.first_pos, doc.len_effective - 1);
}

}  // namespace promptrank
