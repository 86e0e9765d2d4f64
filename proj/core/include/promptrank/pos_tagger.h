#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace promptrank {

// Assigns one Penn Treebank tag per token.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  // Throws std::invalid_argument on an empty token list.
  virtual std::vector<std::string> Tag(std::span<const std::string> tokens) const = 0;
};

// Greedy averaged-perceptron tagger (Honnibal-style feature set).
//
// Weights file layout (JSON):
//   {"format": "promptrank-perceptron-tagger", "version": 1,
//    "classes": [tag, ...],
//    "tagdict": {word: tag, ...},          unambiguous frequent words
//    "weights": {feature: {tag: weight}}}
//
// Immutable after loading; Tag() may be called concurrently.
class PerceptronTagger final : public PosTagger {
 public:
  static constexpr std::string_view kFormat = "promptrank-perceptron-tagger";
  static constexpr int kVersion = 1;

  // Throws InputError if the file is missing, unparsable, or has the wrong
  // header.
  static PerceptronTagger Load(const std::filesystem::path& path);
  static PerceptronTagger FromJson(const nlohmann::json& doc);

  std::vector<std::string> Tag(std::span<const std::string> tokens) const override;

  const std::vector<std::string>& classes() const { return classes_; }

 private:
  PerceptronTagger() = default;

  using ClassIndex = std::uint16_t;
  struct Weight {
    ClassIndex cls;
    double value;
  };

  ClassIndex Predict(const std::vector<std::string>& features) const;

  std::vector<std::string> classes_;  // sorted ascending
  std::unordered_map<std::string, ClassIndex> tagdict_;
  std::unordered_map<std::string, std::vector<Weight>> weights_;
};

// Tokens with externally supplied tags, e.g. from another tagger.
struct PretaggedDocument {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// Reads `token<TAB>tag` lines; a blank line separates documents. Throws
// InputError naming the line of any line without a tab.
std::vector<PretaggedDocument> ReadPretagged(std::istream& in);

}  // namespace promptrank
