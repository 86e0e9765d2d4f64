#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace promptrank {

inline const std::vector<std::size_t> kDefaultKs{5, 10, 15};

// Lowercases, collapses whitespace and Porter-stems every word. Throws
// std::invalid_argument on a phrase with no words.
std::string NormalizePhrase(std::string_view phrase);

// Drops repeated entries, keeping the first occurrence.
std::vector<std::string> DedupPreservingOrder(std::span<const std::string> phrases);

// True if the words of `normalized_phrase` occur contiguously in
// `normalized_words` (both already normalized).
bool PhraseOccursIn(std::string_view normalized_phrase, std::span<const std::string> normalized_words);

enum class Averaging { kMicro, kMacro };

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MatchCounts {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

struct EvalReport {
  std::map<std::size_t, PrfScores> per_k;
  std::map<std::size_t, MatchCounts> counts;  // summed over documents
  Averaging averaging = Averaging::kMicro;
  std::size_t documents = 0;
};

// 2PR / (P + R), or 0 when P + R = 0.
double F1(double precision, double recall);

// `predictions[d]` is document d's ranked list and `gold[d]` its gold set,
// both normalized. Predictions are de-duplicated (first occurrence wins)
// before the top-K cut. Micro averaging divides summed counts; macro
// averaging takes the mean of per-document P, R and F1. Throws
// std::invalid_argument on mismatched sizes or an empty `ks`.
EvalReport Evaluate(std::span<const std::vector<std::string>> predictions,
                    std::span<const std::vector<std::string>> gold, std::span<const std::size_t> ks,
                    Averaging averaging = Averaging::kMicro);

// {"k": {"5": {"p", "r", "f1"}, ...}, "counts": {"5": {...}}, ...}
nlohmann::json ToJson(const EvalReport& report);
EvalReport EvalReportFromJson(const nlohmann::json& j);

}  // namespace promptrank
