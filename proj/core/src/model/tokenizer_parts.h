#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptrank/backend.h"

namespace promptrank::model {

class Normalizer {
 public:
  virtual ~Normalizer() = default;
  virtual std::string Apply(std::string text) const = 0;
};

// Refines a list of pieces; the first stage receives the whole text.
class PreTokenizer {
 public:
  virtual ~PreTokenizer() = default;
  virtual std::vector<std::string> Split(std::vector<std::string> pieces) const = 0;
};

class PieceModel {
 public:
  virtual ~PieceModel() = default;
  virtual void EncodePiece(std::string_view piece, std::vector<TokenId>& out) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::optional<TokenId> TokenToId(std::string_view token) const = 0;
};

std::unique_ptr<Normalizer> MakeNormalizer(const nlohmann::json& spec);
std::unique_ptr<PreTokenizer> MakePreTokenizer(const nlohmann::json& spec);
std::unique_ptr<PieceModel> MakeUnigram(const nlohmann::json& spec);
std::unique_ptr<PieceModel> MakeBpe(const nlohmann::json& spec);

// GPT-2 byte-level helpers.
std::vector<std::string> ByteLevelSplit(std::string_view text);
std::string BytesToUnicode(std::string_view bytes);

}  // namespace promptrank::model
