#include "promptrank/pos_tagger.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "promptrank/errors.h"
#include "promptrank/utf8.h"

namespace promptrank {
namespace {

// Context normalisation the weights were trained with.
std::string NormalizeForContext(const std::string& word) {
  if (word.find('-') != std::string::npos && word.front() != '-') return "!HYPHEN";
  const bool all_digits = !word.empty() && std::all_of(word.begin(), word.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
  if (all_digits && word.size() == 4) return "!YEAR";
  if (std::isdigit(static_cast<unsigned char>(word.front()))) return "!DIGITS";
  return utf8::ToLowerAscii(word);
}

std::string Join(std::string_view a, std::string_view b) {
  std::string s;
  s.reserve(a.size() + b.size() + 1);
  s.append(a).push_back(' ');
  s.append(b);
  return s;
}

std::string Join(std::string_view a, std::string_view b, std::string_view c) {
  return Join(Join(a, b), c);
}

}  // namespace

PerceptronTagger PerceptronTagger::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open tagger weights " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corrupt tagger weights " + path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

PerceptronTagger PerceptronTagger::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != kFormat) {
    throw InputError("tagger weights: missing or unknown format header");
  }
  if (doc.value("version", 0) != kVersion) {
    throw InputError("tagger weights: unsupported version");
  }
  PerceptronTagger t;
  try {
    t.classes_ = doc.at("classes").get<std::vector<std::string>>();
    std::sort(t.classes_.begin(), t.classes_.end());
    if (t.classes_.empty() || t.classes_.size() > 0xFFFF) throw InputError("tagger weights: bad class list");
    auto index_of = [&](const std::string& tag) -> ClassIndex {
      auto it = std::lower_bound(t.classes_.begin(), t.classes_.end(), tag);
      if (it == t.classes_.end() || *it != tag) throw InputError("tagger weights: unknown tag " + tag);
      return static_cast<ClassIndex>(it - t.classes_.begin());
    };
    for (const auto& [word, tag] : doc.at("tagdict").items()) {
      t.tagdict_.emplace(word, index_of(tag.get<std::string>()));
    }
    const auto& weights = doc.at("weights");
    t.weights_.reserve(weights.size());
    for (const auto& [feat, per_class] : weights.items()) {
      std::vector<Weight> row;
      row.reserve(per_class.size());
      for (const auto& [tag, w] : per_class.items()) row.push_back({index_of(tag), w.get<double>()});
      t.weights_.emplace(feat, std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("corrupt tagger weights: ") + e.what());
  }
  return t;
}

PerceptronTagger::ClassIndex PerceptronTagger::Predict(const std::vector<std::string>& features) const {
  std::vector<double> scores(classes_.size(), 0.0);
  for (const auto& f : features) {
    auto it = weights_.find(f);
    if (it == weights_.end()) continue;
    for (const Weight& w : it->second) scores[w.cls] += w.value;
  }
  // Highest score wins; ties go to the alphabetically last tag.
  ClassIndex best = 0;
  for (ClassIndex c = 1; c < scores.size(); ++c) {
    if (scores[c] >= scores[best]) best = c;
  }
  return best;
}

std::vector<std::string> PerceptronTagger::Tag(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw std::invalid_argument("PerceptronTagger::Tag: empty token list");

  std::vector<std::string> context;
  context.reserve(tokens.size() + 4);
  context.emplace_back("-START-");
  context.emplace_back("-START2-");
  for (const auto& w : tokens) context.push_back(w.empty() ? std::string() : NormalizeForContext(w));
  context.emplace_back("-END-");
  context.emplace_back("-END2-");

  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  std::string prev = "-START-";
  std::string prev2 = "-START2-";
  std::vector<std::string> features(14);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& word = tokens[i];
    if (word.empty()) throw std::invalid_argument("PerceptronTagger::Tag: empty token");
    std::string tag;
    if (auto hit = tagdict_.find(word); hit != tagdict_.end()) {
      tag = classes_[hit->second];
    } else {
      const std::size_t c = i + 2;
      features[0] = "bias";
      features[1] = Join("i suffix", utf8::Suffix(word, 3));
      features[2] = Join("i pref1", utf8::Prefix(word, 1));
      features[3] = Join("i-1 tag", prev);
      features[4] = Join("i-2 tag", prev2);
      features[5] = Join("i tag+i-2 tag", prev, prev2);
      features[6] = Join("i word", context[c]);
      features[7] = Join("i-1 tag+i word", prev, context[c]);
      features[8] = Join("i-1 word", context[c - 1]);
      features[9] = Join("i-1 suffix", utf8::Suffix(context[c - 1], 3));
      features[10] = Join("i-2 word", context[c - 2]);
      features[11] = Join("i+1 word", context[c + 1]);
      features[12] = Join("i+1 suffix", utf8::Suffix(context[c + 1], 3));
      features[13] = Join("i+2 word", context[c + 2]);
      tag = classes_[Predict(features)];
    }
    tags.push_back(tag);
    prev2 = std::move(prev);
    prev = std::move(tag);
  }
  return tags;
}

std::vector<PretaggedDocument> ReadPretagged(std::istream& in) {
  std::vector<PretaggedDocument> docs;
  PretaggedDocument current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) docs.push_back(std::move(current));
    current = {};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw InputError("pre-tagged input line " + std::to_string(line_no) + ": expected token<TAB>tag");
    }
    current.tokens.push_back(line.substr(0, tab));
    current.tags.push_back(line.substr(tab + 1));
  }
  flush();
  return docs;
}

}  // namespace promptrank
