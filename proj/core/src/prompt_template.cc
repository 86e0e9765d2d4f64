#include "promptrank/prompt_template.h"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "promptrank/corpus.h"
#include "promptrank/errors.h"

namespace promptrank {
namespace {

std::size_t CountOccurrences(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

}  // namespace

PromptTemplate PromptTemplate::Create(std::string id, std::string encoder_template, std::string decoder_template) {
  if (id.empty()) throw std::invalid_argument("template id must be non-empty");
  if (CountOccurrences(encoder_template, kDocumentPlaceholder) != 1) {
    throw std::invalid_argument("template " + id + ": encoder must contain exactly one [D]");
  }
  if (CountOccurrences(encoder_template, kCandidatePlaceholder) != 0) {
    throw std::invalid_argument("template " + id + ": encoder must not contain [C]");
  }
  if (CountOccurrences(decoder_template, kCandidatePlaceholder) != 1) {
    throw std::invalid_argument("template " + id + ": decoder must contain exactly one [C]");
  }
  if (CountOccurrences(decoder_template, kDocumentPlaceholder) != 0) {
    throw std::invalid_argument("template " + id + ": decoder must not contain [D]");
  }
  if (!std::string_view(decoder_template).ends_with(kCandidatePlaceholder)) {
    throw std::invalid_argument("template " + id + ": [C] must end the decoder template");
  }
  PromptTemplate t;
  t.id_ = std::move(id);
  t.encoder_ = std::move(encoder_template);
  t.decoder_ = std::move(decoder_template);
  t.prefix_words_ = CountWhitespaceWords(t.DecoderPrefix());
  return t;
}

std::string PromptTemplate::RenderEncoder(std::string_view doc_text) const {
  std::string out = encoder_;
  out.replace(out.find(kDocumentPlaceholder), kDocumentPlaceholder.size(), doc_text);
  return out;
}

std::string PromptTemplate::DecoderPrefix() const {
  return decoder_.substr(0, decoder_.size() - kCandidatePlaceholder.size());
}

std::string PromptTemplate::RenderDecoder(std::string_view candidate) const {
  std::string out = DecoderPrefix();
  out.append(candidate);
  return out;
}

void TemplateRegistry::Add(PromptTemplate t) {
  const std::string id = t.id();
  if (by_id_.contains(id) || aliases_.contains(id)) throw std::invalid_argument("duplicate template id " + id);
  by_id_.emplace(id, std::move(t));
  order_.push_back(id);
}

void TemplateRegistry::AddAlias(std::string alias, const std::string& target_id) {
  if (!by_id_.contains(target_id)) throw std::invalid_argument("alias target " + target_id + " not registered");
  if (by_id_.contains(alias) || aliases_.contains(alias)) throw std::invalid_argument("duplicate template id " + alias);
  aliases_.emplace(std::move(alias), target_id);
}

const PromptTemplate* TemplateRegistry::Find(std::string_view id) const {
  if (auto a = aliases_.find(id); a != aliases_.end()) id = a->second;
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

const PromptTemplate& TemplateRegistry::Get(std::string_view id) const {
  if (const auto* t = Find(id)) return *t;
  throw InputError("unknown template id \"" + std::string(id) + "\"");
}

std::vector<std::string> TemplateRegistry::Group(std::string_view group) const {
  std::vector<std::string> ids;
  const std::string prefix = std::string(group) + "-";
  for (const auto& id : order_) {
    if (id.starts_with(prefix)) ids.push_back(id);
  }
  return ids;
}

const TemplateRegistry& BuiltinRegistry() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    const std::string book = "Book:\"[D]\"";
    auto add = [&](const char* id, const std::string& enc, const char* dec) {
      r.Add(PromptTemplate::Create(id, enc, dec));
    };

    add("len0-1", book, "[C]");

    add("len2-1", book, "Book about [C]");
    add("len2-2", book, "It is [C]");
    add("len2-3", book, "Keywords are [C]");
    add("len2-4", book, "Talk about [C]");

    add("len5-1", book, "This book are mainly about [C]");
    add("len5-2", book, "This book mainly focuses on [C]");
    add("len5-3", book, "This book mainly talks about [C]");
    add("len5-4", book, "This book pays attention to [C]");

    add("len10-1", book, "All in all, the core of this book is [C]");
    add("len10-2", book, "Read this book and tell me that it is about [C]");
    add("len10-3", book, "Take a look at the full book, it involves [C]");
    add("len10-4", book, "Think carefully, this book has somthing to do with [C]");

    add("len20-1", book,
        "Please read this book carefully from beginning to end and just give your conclusion, "
        "this book mainly focuses on [C]");
    add("len20-2", book,
        "The book describes something so interesting, please read it carefully and tell us that "
        "this book is about [C]");
    add("len20-3", book,
        "The book is interesting, please read it carefully and summarize its main points with a "
        "few keywords like [C]");
    add("len20-4", book,
        "Through careful reading and adequate analysis, we have come to the conclusion that this "
        "book mainly talks about [C]");

    add("noun-book", book, "This book mainly talks about [C]");
    add("noun-passage", "Passage:\"[D]\"", "This passage mainly talks about [C]");
    add("noun-news", "News:\"[D]\"", "This news mainly talks about [C]");
    add("noun-text", "Text:\"[D]\"", "This text mainly talks about [C]");
    add("noun-paper", "Paper:\"[D]\"", "This paper mainly talks about [C]");

    add("kw-1", book, "Keywords of this book are [C]");

    r.AddAlias(std::string(kDefaultTemplateId), "len5-3");
    r.AddAlias("len5-default", "len5-3");
    r.AddAlias("content-1", "len0-1");
    r.AddAlias("content-2", "kw-1");
    r.AddAlias("content-3", "len5-2");
    r.AddAlias("content-4", "len5-3");
    r.AddAlias("content-5", "noun-passage");
    return r;
  }();
  return registry;
}

TemplateRegistry LoadTemplates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open template file " + path.string());
  TemplateRegistry r;
  try {
    auto doc = nlohmann::json::parse(in);
    const auto& list = doc.is_object() ? doc.at("templates") : doc;
    if (!list.is_array()) throw InputError("template file " + path.string() + ": expected an array");
    for (const auto& entry : list) {
      r.Add(PromptTemplate::Create(entry.at("id").get<std::string>(), entry.at("encoder").get<std::string>(),
                                   entry.at("decoder").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("template file " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError("template file " + path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace promptrank
