#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "promptrank/pos_tagger.h"

namespace promptrank {

// Word positions beyond this index are clamped; mirrors the 512-token
// encoder input limit.
inline constexpr std::size_t kDefaultPositionCap = 512;

struct TaggedDocument {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // parallel to tokens
  std::size_t len_effective = 0;  // min(tokens.size(), position cap)
};

// Validates |tokens| == |tags|, non-empty tags and cap >= 1; throws
// std::invalid_argument otherwise.
TaggedDocument MakeTaggedDocument(std::vector<std::string> tokens, std::vector<std::string> tags,
                                  std::size_t position_cap = kDefaultPositionCap);

// Tokenizes and tags raw text. Whitespace-only text yields an empty document.
TaggedDocument Preprocess(std::string_view text, const PosTagger& tagger,
                          std::size_t position_cap = kDefaultPositionCap);

}  // namespace promptrank
