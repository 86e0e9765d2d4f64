#include "promptrank/preprocess.h"

#include <algorithm>
#include <stdexcept>

#include "promptrank/word_tokenizer.h"

namespace promptrank {

TaggedDocument MakeTaggedDocument(std::vector<std::string> tokens, std::vector<std::string> tags,
                                  std::size_t position_cap) {
  if (tokens.size() != tags.size()) {
    throw std::invalid_argument("tagged document: " + std::to_string(tokens.size()) + " tokens but " +
                                std::to_string(tags.size()) + " tags");
  }
  if (position_cap == 0) throw std::invalid_argument("tagged document: position cap must be >= 1");
  for (const auto& t : tags) {
    if (t.empty()) throw std::invalid_argument("tagged document: empty tag");
  }
  TaggedDocument doc;
  doc.len_effective = std::min(tokens.size(), position_cap);
  doc.tokens = std::move(tokens);
  doc.tags = std::move(tags);
  return doc;
}

TaggedDocument Preprocess(std::string_view text, const PosTagger& tagger, std::size_t position_cap) {
  auto tokens = Tokenize(text);
  if (tokens.empty()) return MakeTaggedDocument({}, {}, position_cap);
  auto tags = tagger.Tag(tokens);
  return MakeTaggedDocument(std::move(tokens), std::move(tags), position_cap);
}

}  // namespace promptrank
