#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace promptrank {

inline constexpr std::string_view kDocumentPlaceholder = "[D]";
inline constexpr std::string_view kCandidatePlaceholder = "[C]";
inline constexpr std::string_view kDefaultTemplateId = "default";

// An encoder/decoder prompt pair. The encoder side holds exactly one "[D]";
// the decoder side holds exactly one "[C]" and nothing after it, so every
// candidate's decoder text shares the same prefix.
class PromptTemplate {
 public:
  // Throws std::invalid_argument when the placeholder rules are violated.
  static PromptTemplate Create(std::string id, std::string encoder_template, std::string decoder_template);

  const std::string& id() const { return id_; }
  const std::string& encoder_template() const { return encoder_; }
  const std::string& decoder_template() const { return decoder_; }
  std::size_t decoder_prefix_len_words() const { return prefix_words_; }

  // "[D]" replaced by `doc_text` verbatim.
  std::string RenderEncoder(std::string_view doc_text) const;
  // Decoder template with "[C]" removed; whitespace before it is kept.
  std::string DecoderPrefix() const;
  std::string RenderDecoder(std::string_view candidate) const;

 private:
  PromptTemplate() = default;

  std::string id_;
  std::string encoder_;
  std::string decoder_;
  std::size_t prefix_words_ = 0;
};

class TemplateRegistry {
 public:
  // Throws std::invalid_argument on a duplicate id or alias.
  void Add(PromptTemplate t);
  void AddAlias(std::string alias, const std::string& target_id);

  // nullptr when unknown.
  const PromptTemplate* Find(std::string_view id) const;
  // Throws InputError when unknown.
  const PromptTemplate& Get(std::string_view id) const;

  // Canonical ids in registration order.
  const std::vector<std::string>& ids() const { return order_; }
  // Ids whose canonical name starts with "<group>-" (e.g. "len10").
  std::vector<std::string> Group(std::string_view group) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> by_id_;
  std::map<std::string, std::string, std::less<>> aliases_;
  std::vector<std::string> order_;
};

// Built-in templates. Ids encode the decoder length group and index
// ("len0-1", "len2-1".."len2-4", "len5-1".."len5-4", "len10-*", "len20-*"),
// the document-noun variants ("noun-book", "noun-passage", "noun-news",
// "noun-text", "noun-paper") and "kw-1". "default" (alias "len5-default")
// is "len5-3": Book:"[D]" / "This book mainly talks about [C]". Aliases
// "content-1".."content-5" name the five template-content comparisons.
const TemplateRegistry& BuiltinRegistry();

// Loads user templates from JSON: either an array of
// {"id": .., "encoder": .., "decoder": ..} objects or {"templates": [...]}.
// Throws InputError on unreadable/invalid files.
TemplateRegistry LoadTemplates(const std::filesystem::path& path);

}  // namespace promptrank
