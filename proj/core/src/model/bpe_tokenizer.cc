#include <array>
#include <limits>
#include <string>
#include <unordered_map>

#include "model/tokenizer_parts.h"
#include "promptrank/errors.h"
#include "promptrank/utf8.h"

namespace promptrank::model {
namespace {

// Approximations of \p{L} and \p{N} without a Unicode database: ASCII is
// exact; above ASCII everything except common punctuation, symbol and digit
// blocks counts as a letter.
bool IsNumber(char32_t cp) {
  if (cp >= '0' && cp <= '9') return true;
  return cp == 0xB2 || cp == 0xB3 || cp == 0xB9 || (cp >= 0xBC && cp <= 0xBE) || (cp >= 0x2070 && cp <= 0x2079) ||
         (cp >= 0x2080 && cp <= 0x2089) || (cp >= 0x2150 && cp <= 0x218B) || (cp >= 0x2460 && cp <= 0x249B) ||
         (cp >= 0xFF10 && cp <= 0xFF19) || (cp >= 0x0660 && cp <= 0x0669) || (cp >= 0x0966 && cp <= 0x096F);
}

bool IsLetter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (IsNumber(cp) || utf8::IsSpace(cp)) return false;
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x0300 && cp <= 0x036F) return false;  // combining marks are \p{M}
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, shapes
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if ((cp >= 0xFF01 && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) return false;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
  return true;
}

enum class Kind { kLetter, kNumber, kSpace, kOther };

Kind Classify(char32_t cp) {
  if (utf8::IsSpace(cp)) return Kind::kSpace;
  if (IsLetter(cp)) return Kind::kLetter;
  if (IsNumber(cp)) return Kind::kNumber;
  return Kind::kOther;
}

const std::array<std::string, 256>& ByteTable() {
  static const std::array<std::string, 256> table = [] {
    std::array<std::string, 256> t;
    int extra = 0;
    for (int b = 0; b < 256; ++b) {
      const bool printable = (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
      const char32_t cp = printable ? static_cast<char32_t>(b) : static_cast<char32_t>(256 + extra++);
      utf8::Append(t[static_cast<std::size_t>(b)], cp);
    }
    return t;
  }();
  return table;
}

class Bpe : public PieceModel {
 public:
  explicit Bpe(const nlohmann::json& spec) {
    for (const char* key : {"continuing_subword_prefix", "end_of_word_suffix"}) {
      if (spec.contains(key) && !spec[key].is_null() && !spec[key].get<std::string>().empty()) {
        throw BackendError(std::string("unsupported BPE option: ") + key);
      }
    }
    if (spec.contains("dropout") && !spec["dropout"].is_null() && spec["dropout"].get<double>() > 0.0) {
      throw BackendError("BPE dropout is not supported for scoring");
    }
    std::size_t max_id = 0;
    for (const auto& [token, id] : spec.at("vocab").items()) {
      vocab_.emplace(token, id.get<TokenId>());
      max_id = std::max(max_id, id.get<std::size_t>());
    }
    vocab_size_ = vocab_.empty() ? 0 : max_id + 1;
    int rank = 0;
    for (const auto& m : spec.at("merges")) {
      std::string left;
      std::string right;
      if (m.is_array()) {
        left = m.at(0).get<std::string>();
        right = m.at(1).get<std::string>();
      } else {
        const auto s = m.get<std::string>();
        const auto space = s.find(' ');
        if (space == std::string::npos) throw BackendError("malformed BPE merge: " + s);
        left = s.substr(0, space);
        right = s.substr(space + 1);
      }
      ranks_.emplace(left + '\x01' + right, rank++);
    }
    if (spec.contains("unk_token") && !spec["unk_token"].is_null()) {
      auto it = vocab_.find(spec["unk_token"].get<std::string>());
      if (it != vocab_.end()) unk_id_ = it->second;
    }
    fuse_unk_ = spec.value("fuse_unk", false);
    byte_fallback_ = spec.value("byte_fallback", false);
    ignore_merges_ = spec.value("ignore_merges", false);
  }

  void EncodePiece(std::string_view piece, std::vector<TokenId>& out) const override {
    if (ignore_merges_) {
      if (auto it = vocab_.find(std::string(piece)); it != vocab_.end()) {
        out.push_back(it->second);
        return;
      }
    }
    std::vector<std::string> symbols;
    for (std::size_t pos = 0; pos < piece.size();) {
      const std::size_t begin = pos;
      utf8::Decode(piece, pos);
      symbols.emplace_back(piece.substr(begin, pos - begin));
    }
    while (symbols.size() > 1) {
      int best_rank = std::numeric_limits<int>::max();
      std::size_t best_at = 0;
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto it = ranks_.find(symbols[i] + '\x01' + symbols[i + 1]);
        if (it != ranks_.end() && it->second < best_rank) {
          best_rank = it->second;
          best_at = i;
        }
      }
      if (best_rank == std::numeric_limits<int>::max()) break;
      const std::string left = symbols[best_at];
      const std::string right = symbols[best_at + 1];
      std::vector<std::string> merged;
      merged.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size();) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          merged.push_back(left + right);
          i += 2;
        } else {
          merged.push_back(std::move(symbols[i]));
          ++i;
        }
      }
      symbols = std::move(merged);
    }
    bool previous_unknown = false;
    for (const auto& s : symbols) {
      if (auto it = vocab_.find(s); it != vocab_.end()) {
        out.push_back(it->second);
        previous_unknown = false;
        continue;
      }
      if (byte_fallback_ && EmitBytes(s, out)) {
        previous_unknown = false;
        continue;
      }
      if (!unk_id_) throw BackendError("BPE symbol '" + s + "' is not in the vocabulary and no unk_token is set");
      if (!(fuse_unk_ && previous_unknown)) out.push_back(*unk_id_);
      previous_unknown = true;
    }
  }

  std::size_t vocab_size() const override { return vocab_size_; }

  std::optional<TokenId> TokenToId(std::string_view token) const override {
    auto it = vocab_.find(std::string(token));
    if (it == vocab_.end()) return std::nullopt;
    return it->second;
  }

 private:
  bool EmitBytes(const std::string& s, std::vector<TokenId>& out) const {
    std::vector<TokenId> ids;
    for (unsigned char b : s) {
      char name[8];
      std::snprintf(name, sizeof(name), "<0x%02X>", b);
      auto it = vocab_.find(name);
      if (it == vocab_.end()) return false;
      ids.push_back(it->second);
    }
    out.insert(out.end(), ids.begin(), ids.end());
    return true;
  }

  std::unordered_map<std::string, TokenId> vocab_;
  std::unordered_map<std::string, int> ranks_;
  std::size_t vocab_size_ = 0;
  std::optional<TokenId> unk_id_;
  bool fuse_unk_ = false;
  bool byte_fallback_ = false;
  bool ignore_merges_ = false;
};

}  // namespace

std::string BytesToUnicode(std::string_view bytes) {
  const auto& table = ByteTable();
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) out += table[b];
  return out;
}

// Hand-written equivalent of the GPT-2 pattern
//   's|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+
std::vector<std::string> ByteLevelSplit(std::string_view text) {
  struct Cp {
    std::size_t begin;
    std::size_t end;
    Kind kind;
  };
  std::vector<Cp> cps;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t begin = pos;
    const char32_t cp = utf8::Decode(text, pos);
    cps.push_back({begin, pos, Classify(cp)});
  }
  auto slice = [&](std::size_t from, std::size_t to) {
    return std::string(text.substr(cps[from].begin, cps[to - 1].end - cps[from].begin));
  };

  std::vector<std::string> out;
  const std::size_t n = cps.size();
  for (std::size_t i = 0; i < n;) {
    if (text[cps[i].begin] == '\'') {
      const std::string_view rest = text.substr(cps[i].begin + 1);
      std::size_t len = 0;
      for (std::string_view c : {"re", "ve", "ll", "s", "t", "m", "d"}) {
        if (rest.starts_with(c)) {
          len = c.size();
          break;
        }
      }
      if (len > 0) {
        out.push_back(slice(i, i + 1 + len));
        i += 1 + len;
        continue;
      }
    }
    std::size_t start = i;
    std::size_t j = i;
    if (text[cps[i].begin] == ' ' && i + 1 < n && cps[i + 1].kind != Kind::kSpace) ++j;
    const Kind kind = cps[j].kind;
    if (kind != Kind::kSpace) {
      std::size_t k = j + 1;
      while (k < n && cps[k].kind == kind) ++k;
      out.push_back(slice(start, k));
      i = k;
      continue;
    }
    std::size_t k = i;
    while (k < n && cps[k].kind == Kind::kSpace) ++k;
    if (k == n || k - i == 1) {
      out.push_back(slice(i, k));
      i = k;
    } else {
      out.push_back(slice(i, k - 1));
      i = k - 1;
    }
  }
  return out;
}

std::unique_ptr<PieceModel> MakeBpe(const nlohmann::json& spec) { return std::make_unique<Bpe>(spec); }

}  // namespace promptrank::model
