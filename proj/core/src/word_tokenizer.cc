#include "promptrank/word_tokenizer.h"

#include <array>
#include <cctype>

#include "promptrank/utf8.h"

namespace promptrank {
namespace {

constexpr std::string_view kLeading = "\"'([{<`";
constexpr std::string_view kTrailing = ".,;:!?)]}>\"'";
constexpr std::array<std::string_view, 4> kLeadingMulti = {"“", "‘", "«", "``"};
constexpr std::array<std::string_view, 5> kTrailingMulti = {"”", "’", "»", "''", "..."};
constexpr std::array<std::string_view, 7> kClitics = {"n't", "'s", "'re", "'ve", "'ll", "'d", "'m"};

bool StartsWith(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool EndsWith(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

bool IEndsWith(std::string_view s, std::string_view p) {
  if (s.size() < p.size()) return false;
  auto tail = s.substr(s.size() - p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(tail[i])) != p[i]) return false;
  }
  return true;
}

// "U.S.", "e.g.", "i.e.": letters separated by single dots, ending in a dot.
bool IsDottedAbbreviation(std::string_view w) {
  if (w.size() < 4 || w.back() != '.') return false;
  std::size_t run = 0;
  for (char c : w) {
    if (c == '.') {
      if (run == 0 || run > 3) return false;
      run = 0;
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      ++run;
    } else {
      return false;
    }
  }
  return true;
}

void TokenizeChunk(std::string_view chunk, std::vector<std::string>& out) {
  // Leading punctuation.
  while (!chunk.empty()) {
    bool peeled = false;
    for (auto m : kLeadingMulti) {
      if (StartsWith(chunk, m) && chunk.size() > m.size()) {
        out.emplace_back(m);
        chunk.remove_prefix(m.size());
        peeled = true;
        break;
      }
    }
    if (peeled) continue;
    if (chunk.size() > 1 && kLeading.find(chunk.front()) != std::string_view::npos) {
      out.emplace_back(1, chunk.front());
      chunk.remove_prefix(1);
      continue;
    }
    break;
  }

  // Trailing punctuation, collected right to left.
  std::vector<std::string> tail;
  while (chunk.size() > 1) {
    bool peeled = false;
    for (auto m : kTrailingMulti) {
      if (EndsWith(chunk, m) && chunk.size() > m.size()) {
        tail.emplace_back(m);
        chunk.remove_suffix(m.size());
        peeled = true;
        break;
      }
    }
    if (peeled) continue;
    const char c = chunk.back();
    if (kTrailing.find(c) == std::string_view::npos) break;
    if (c == '.' && IsDottedAbbreviation(chunk)) break;
    tail.emplace_back(1, c);
    chunk.remove_suffix(1);
  }

  // Clitics.
  std::string_view clitic;
  for (auto cl : kClitics) {
    if (chunk.size() > cl.size() && IEndsWith(chunk, cl)) {
      clitic = chunk.substr(chunk.size() - cl.size());
      chunk.remove_suffix(cl.size());
      break;
    }
  }

  if (!chunk.empty()) out.emplace_back(chunk);
  if (!clitic.empty()) out.emplace_back(clitic);
  for (auto it = tail.rbegin(); it != tail.rend(); ++it) out.push_back(std::move(*it));
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < text.size()) {
    const std::size_t here = pos;
    const char32_t cp = utf8::Decode(text, pos);
    if (utf8::IsSpace(cp)) {
      if (start != std::string_view::npos) {
        TokenizeChunk(text.substr(start, here - start), tokens);
        start = std::string_view::npos;
      }
    } else if (start == std::string_view::npos) {
      start = here;
    }
  }
  if (start != std::string_view::npos) TokenizeChunk(text.substr(start), tokens);
  return tokens;
}

}  // namespace promptrank
