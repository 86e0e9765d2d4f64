#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace promptrank {

// Deterministic Penn-Treebank-flavoured word tokenizer.
//
// Splits on whitespace, then peels leading/trailing punctuation into their
// own tokens and splits English clitics ('s, n't, 're, 've, 'll, 'd, 'm).
// Hyphenated words ("state-of-the-art"), numbers ("3.5", "1,000") and dotted
// abbreviations ("U.S.", "e.g.") stay whole.
std::vector<std::string> Tokenize(std::string_view text);

}  // namespace promptrank
