#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <utility>

#include "model/tokenizer_parts.h"
#include "promptrank/errors.h"
#include "promptrank/subword_tokenizer.h"
#include "promptrank/utf8.h"

namespace promptrank::model {
namespace {

using nlohmann::json;

constexpr std::string_view kMetaspace = "\xE2\x96\x81";  // U+2581

std::string Base64Decode(std::string_view in) {
  static constexpr std::string_view kAlphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const auto idx = kAlphabet.find(c);
    if (idx == std::string_view::npos) throw BackendError("invalid base64 in precompiled_charsmap");
    acc = (acc << 6) | static_cast<std::uint32_t>(idx);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

class SequenceNormalizer : public Normalizer {
 public:
  explicit SequenceNormalizer(std::vector<std::unique_ptr<Normalizer>> parts) : parts_(std::move(parts)) {}
  std::string Apply(std::string text) const override {
    for (const auto& p : parts_) text = p->Apply(std::move(text));
    return text;
  }

 private:
  std::vector<std::unique_ptr<Normalizer>> parts_;
};

class StripNormalizer : public Normalizer {
 public:
  StripNormalizer(bool left, bool right) : left_(left), right_(right) {}
  std::string Apply(std::string text) const override {
    std::size_t begin = 0;
    std::size_t end = text.size();
    if (left_) {
      while (begin < end) {
        std::size_t pos = begin;
        if (!utf8::IsSpace(utf8::Decode(text, pos))) break;
        begin = pos;
      }
    }
    if (right_) {
      while (end > begin) {
        std::size_t start = end - 1;
        while (start > begin && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) --start;
        std::size_t pos = start;
        if (!utf8::IsSpace(utf8::Decode(text, pos))) break;
        end = start;
      }
    }
    return text.substr(begin, end - begin);
  }

 private:
  bool left_;
  bool right_;
};

class ReplaceNormalizer : public Normalizer {
 public:
  ReplaceNormalizer(std::string literal, std::optional<std::regex> pattern, std::string content)
      : literal_(std::move(literal)), pattern_(std::move(pattern)), content_(std::move(content)) {
    for (char c : content_) {
      if (c == '$') escaped_.push_back('$');
      escaped_.push_back(c);
    }
  }
  std::string Apply(std::string text) const override {
    if (pattern_) return std::regex_replace(text, *pattern_, escaped_);
    if (literal_.empty()) return text;
    std::string out;
    std::size_t pos = 0;
    for (std::size_t hit; (hit = text.find(literal_, pos)) != std::string::npos; pos = hit + literal_.size()) {
      out.append(text, pos, hit - pos);
      out += content_;
    }
    out.append(text, pos, std::string::npos);
    return out;
  }

 private:
  std::string literal_;
  std::optional<std::regex> pattern_;
  std::string content_;
  std::string escaped_;  // content_ with '$' doubled for regex_replace
};

class LowercaseNormalizer : public Normalizer {
 public:
  std::string Apply(std::string text) const override { return utf8::ToLowerAscii(text); }
};

class PrependNormalizer : public Normalizer {
 public:
  explicit PrependNormalizer(std::string prefix) : prefix_(std::move(prefix)) {}
  std::string Apply(std::string text) const override { return text.empty() ? text : prefix_ + text; }

 private:
  std::string prefix_;
};

bool IsCombiningMark(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) || (cp >= 0x1DC0 && cp <= 0x1DFF) ||
         (cp >= 0x20D0 && cp <= 0x20FF) || (cp >= 0xFE20 && cp <= 0xFE2F) || cp == 0x200D ||
         (cp >= 0xFE00 && cp <= 0xFE0F);
}

// Sentencepiece character map: a darts-clone double array over UTF-8 byte
// strings whose values index NUL-terminated replacements.
class PrecompiledNormalizer : public Normalizer {
 public:
  explicit PrecompiledNormalizer(const std::string& blob) {
    if (blob.size() < 4) throw BackendError("precompiled_charsmap too short");
    std::uint32_t trie_size = 0;
    std::memcpy(&trie_size, blob.data(), 4);
    if (trie_size % 4 != 0 || trie_size > blob.size() - 4) throw BackendError("corrupt precompiled_charsmap");
    units_.resize(trie_size / 4);
    std::memcpy(units_.data(), blob.data() + 4, trie_size);
    normalized_ = blob.substr(4 + trie_size);
  }

  std::string Apply(std::string text) const override {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
      // A cluster is a code point plus any combining marks that follow it.
      const std::size_t begin = pos;
      utf8::Decode(text, pos);
      std::size_t end = pos;
      while (end < text.size()) {
        std::size_t next = end;
        if (!IsCombiningMark(utf8::Decode(text, next))) break;
        end = next;
      }
      const std::string_view cluster(text.data() + begin, end - begin);
      if (cluster.size() < 6) {
        if (auto norm = Transform(cluster)) {
          out += *norm;
          pos = end;
          continue;
        }
      }
      for (std::size_t p = begin; p < end;) {
        const std::size_t cp_begin = p;
        utf8::Decode(text, p);
        const std::string_view part(text.data() + cp_begin, p - cp_begin);
        if (auto norm = Transform(part)) {
          out += *norm;
        } else {
          out += part;
        }
      }
      pos = end;
    }
    return out;
  }

 private:
  static bool HasLeaf(std::uint32_t unit) { return ((unit >> 8) & 1) == 1; }
  static std::uint32_t Value(std::uint32_t unit) { return unit & ((1u << 31) - 1); }
  static std::uint32_t Label(std::uint32_t unit) { return unit & ((1u << 31) | 0xFF); }
  static std::uint32_t Offset(std::uint32_t unit) { return (unit >> 10) << ((unit & (1u << 9)) >> 6); }

  // Replacement for the shortest trie key that prefixes `chunk`.
  std::optional<std::string_view> Transform(std::string_view chunk) const {
    if (units_.empty()) return std::nullopt;
    std::size_t node = 0;
    std::uint32_t unit = units_[node];
    node ^= Offset(unit);
    for (char ch : chunk) {
      const auto c = static_cast<unsigned char>(ch);
      node ^= c;
      if (node >= units_.size()) return std::nullopt;
      unit = units_[node];
      if (Label(unit) != c) return std::nullopt;
      node ^= Offset(unit);
      if (HasLeaf(unit)) {
        if (node >= units_.size()) return std::nullopt;
        const std::size_t index = Value(units_[node]);
        if (index >= normalized_.size()) return std::nullopt;
        const std::size_t stop = normalized_.find('\0', index);
        return std::string_view(normalized_).substr(index, stop == std::string::npos ? stop : stop - index);
      }
    }
    return std::nullopt;
  }

  std::vector<std::uint32_t> units_;
  std::string normalized_;
};

class SequencePreTokenizer : public PreTokenizer {
 public:
  explicit SequencePreTokenizer(std::vector<std::unique_ptr<PreTokenizer>> parts) : parts_(std::move(parts)) {}
  std::vector<std::string> Split(std::vector<std::string> pieces) const override {
    for (const auto& p : parts_) pieces = p->Split(std::move(pieces));
    return pieces;
  }

 private:
  std::vector<std::unique_ptr<PreTokenizer>> parts_;
};

class WhitespaceSplitPreTokenizer : public PreTokenizer {
 public:
  std::vector<std::string> Split(std::vector<std::string> pieces) const override {
    std::vector<std::string> out;
    for (const auto& piece : pieces) {
      std::string current;
      for (std::size_t pos = 0; pos < piece.size();) {
        const std::size_t begin = pos;
        if (utf8::IsSpace(utf8::Decode(piece, pos))) {
          if (!current.empty()) out.push_back(std::move(current));
          current.clear();
        } else {
          current.append(piece, begin, pos - begin);
        }
      }
      if (!current.empty()) out.push_back(std::move(current));
    }
    return out;
  }
};

class MetaspacePreTokenizer : public PreTokenizer {
 public:
  enum class Prepend { kAlways, kFirst, kNever };
  MetaspacePreTokenizer(std::string replacement, Prepend prepend, bool split)
      : replacement_(std::move(replacement)), prepend_(prepend), split_(split) {}

  std::vector<std::string> Split(std::vector<std::string> pieces) const override {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      std::string s;
      for (char c : pieces[i]) {
        if (c == ' ') {
          s += replacement_;
        } else {
          s.push_back(c);
        }
      }
      const bool want_prefix = prepend_ == Prepend::kAlways || (prepend_ == Prepend::kFirst && i == 0);
      if (want_prefix && !s.starts_with(replacement_)) s.insert(0, replacement_);
      if (!split_) {
        out.push_back(std::move(s));
        continue;
      }
      // Each replacement character opens a new piece.
      std::size_t start = 0;
      for (std::size_t hit = s.find(replacement_, 1); hit != std::string::npos;
           hit = s.find(replacement_, hit + replacement_.size())) {
        if (hit > start) out.push_back(s.substr(start, hit - start));
        start = hit;
      }
      if (start < s.size()) out.push_back(s.substr(start));
    }
    return out;
  }

 private:
  std::string replacement_;
  Prepend prepend_;
  bool split_;
};

class ByteLevelPreTokenizer : public PreTokenizer {
 public:
  ByteLevelPreTokenizer(bool add_prefix_space, bool use_regex)
      : add_prefix_space_(add_prefix_space), use_regex_(use_regex) {}

  std::vector<std::string> Split(std::vector<std::string> pieces) const override {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      std::string s = std::move(pieces[i]);
      if (add_prefix_space_ && i == 0 && !s.empty() && s.front() != ' ') s.insert(0, " ");
      if (use_regex_) {
        for (const auto& part : ByteLevelSplit(s)) out.push_back(BytesToUnicode(part));
      } else if (!s.empty()) {
        out.push_back(BytesToUnicode(s));
      }
    }
    return out;
  }

 private:
  bool add_prefix_space_;
  bool use_regex_;
};

std::string TypeOf(const json& spec) { return spec.value("type", std::string()); }

struct AddedToken {
  std::string content;
  TokenId id;
};

class JsonTokenizer : public SubwordTokenizer {
 public:
  JsonTokenizer(std::unique_ptr<Normalizer> normalizer, std::unique_ptr<PreTokenizer> pre,
                std::unique_ptr<PieceModel> model, std::vector<AddedToken> added)
      : normalizer_(std::move(normalizer)), pre_(std::move(pre)), model_(std::move(model)), added_(std::move(added)) {
    std::sort(added_.begin(), added_.end(),
              [](const AddedToken& a, const AddedToken& b) { return a.content.size() > b.content.size(); });
  }

  std::vector<TokenId> Encode(std::string_view text) const override {
    std::vector<TokenId> ids;
    std::size_t start = 0;
    for (std::size_t pos = 0; pos < text.size();) {
      const AddedToken* hit = nullptr;
      for (const auto& a : added_) {
        if (!a.content.empty() && text.substr(pos).starts_with(a.content)) {
          hit = &a;
          break;
        }
      }
      if (hit == nullptr) {
        ++pos;
        continue;
      }
      EncodeSpan(text.substr(start, pos - start), ids);
      ids.push_back(hit->id);
      pos += hit->content.size();
      start = pos;
    }
    EncodeSpan(text.substr(start), ids);
    return ids;
  }

  std::size_t vocab_size() const override {
    std::size_t n = model_->vocab_size();
    for (const auto& a : added_) n = std::max(n, static_cast<std::size_t>(a.id) + 1);
    return n;
  }

  std::optional<TokenId> TokenToId(std::string_view token) const override {
    for (const auto& a : added_) {
      if (a.content == token) return a.id;
    }
    return model_->TokenToId(token);
  }

 private:
  void EncodeSpan(std::string_view span, std::vector<TokenId>& ids) const {
    if (span.empty()) return;
    std::string text(span);
    if (normalizer_) text = normalizer_->Apply(std::move(text));
    if (text.empty()) return;
    std::vector<std::string> pieces{std::move(text)};
    if (pre_) pieces = pre_->Split(std::move(pieces));
    for (const auto& p : pieces) {
      if (!p.empty()) model_->EncodePiece(p, ids);
    }
  }

  std::unique_ptr<Normalizer> normalizer_;
  std::unique_ptr<PreTokenizer> pre_;
  std::unique_ptr<PieceModel> model_;
  std::vector<AddedToken> added_;
};

}  // namespace

std::unique_ptr<Normalizer> MakeNormalizer(const json& spec) {
  if (spec.is_null()) return nullptr;
  const std::string type = TypeOf(spec);
  if (type == "Sequence") {
    std::vector<std::unique_ptr<Normalizer>> parts;
    for (const auto& s : spec.at("normalizers")) {
      if (auto n = MakeNormalizer(s)) parts.push_back(std::move(n));
    }
    return std::make_unique<SequenceNormalizer>(std::move(parts));
  }
  if (type == "Strip") return std::make_unique<StripNormalizer>(spec.value("strip_left", true), spec.value("strip_right", true));
  if (type == "Replace") {
    const auto& pattern = spec.at("pattern");
    std::string content = spec.at("content").get<std::string>();
    if (pattern.contains("Regex")) {
      return std::make_unique<ReplaceNormalizer>("", std::regex(pattern["Regex"].get<std::string>()), std::move(content));
    }
    return std::make_unique<ReplaceNormalizer>(pattern.at("String").get<std::string>(), std::nullopt, std::move(content));
  }
  if (type == "Precompiled") {
    const auto& map = spec.at("precompiled_charsmap");
    if (map.is_null()) return nullptr;
    return std::make_unique<PrecompiledNormalizer>(Base64Decode(map.get<std::string>()));
  }
  if (type == "Lowercase") return std::make_unique<LowercaseNormalizer>();
  if (type == "Prepend") return std::make_unique<PrependNormalizer>(spec.at("prepend").get<std::string>());
  throw BackendError("unsupported tokenizer normalizer: " + type);
}

std::unique_ptr<PreTokenizer> MakePreTokenizer(const json& spec) {
  if (spec.is_null()) return nullptr;
  const std::string type = TypeOf(spec);
  if (type == "Sequence") {
    std::vector<std::unique_ptr<PreTokenizer>> parts;
    for (const auto& s : spec.at("pretokenizers")) {
      if (auto p = MakePreTokenizer(s)) parts.push_back(std::move(p));
    }
    return std::make_unique<SequencePreTokenizer>(std::move(parts));
  }
  if (type == "WhitespaceSplit") return std::make_unique<WhitespaceSplitPreTokenizer>();
  if (type == "Metaspace") {
    auto prepend = MetaspacePreTokenizer::Prepend::kAlways;
    if (spec.contains("prepend_scheme")) {
      const auto scheme = spec["prepend_scheme"].get<std::string>();
      if (scheme == "first") prepend = MetaspacePreTokenizer::Prepend::kFirst;
      if (scheme == "never") prepend = MetaspacePreTokenizer::Prepend::kNever;
    } else if (!spec.value("add_prefix_space", true)) {
      prepend = MetaspacePreTokenizer::Prepend::kNever;
    }
    return std::make_unique<MetaspacePreTokenizer>(spec.value("replacement", std::string(kMetaspace)), prepend,
                                                   spec.value("split", true));
  }
  if (type == "ByteLevel") {
    return std::make_unique<ByteLevelPreTokenizer>(spec.value("add_prefix_space", false), spec.value("use_regex", true));
  }
  throw BackendError("unsupported tokenizer pre_tokenizer: " + type);
}

}  // namespace promptrank::model

namespace promptrank {

std::unique_ptr<SubwordTokenizer> ParseTokenizerJson(std::string_view json_text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(json_text);
    const json& m = doc.at("model");
    const std::string type = m.value("type", std::string());
    std::unique_ptr<model::PieceModel> piece_model;
    if (type == "Unigram") {
      piece_model = model::MakeUnigram(m);
    } else if (type == "BPE") {
      piece_model = model::MakeBpe(m);
    } else {
      throw BackendError("unsupported tokenizer model: " + type);
    }
    std::vector<model::AddedToken> added;
    if (doc.contains("added_tokens")) {
      for (const auto& a : doc["added_tokens"]) added.push_back({a.at("content").get<std::string>(), a.at("id").get<TokenId>()});
    }
    return std::make_unique<model::JsonTokenizer>(model::MakeNormalizer(doc.value("normalizer", json())),
                                                  model::MakePreTokenizer(doc.value("pre_tokenizer", json())),
                                                  std::move(piece_model), std::move(added));
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed tokenizer.json: ") + e.what());
  } catch (const std::regex_error& e) {
    throw BackendError(std::string("unsupported regex in tokenizer.json: ") + e.what());
  }
}

std::unique_ptr<SubwordTokenizer> LoadTokenizerJson(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("cannot open tokenizer file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseTokenizerJson(buf.str());
}

}  // namespace promptrank
