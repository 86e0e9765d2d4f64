#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace promptrank {

// One benchmark document with its gold keyphrases, exactly as stored on disk.
struct CorpusRecord {
  std::string id;
  std::string text;
  std::vector<std::string> gold;

  bool operator==(const CorpusRecord&) const = default;
};

// Dataset-level statistics. Histogram keys are gold phrase word lengths
// 1..4; key 5 collects every phrase of five or more words. Values are
// percentages of all gold phrases.
struct CorpusStats {
  std::size_t n_doc = 0;
  double avg_len_words = 0.0;
  std::size_t total_candidates = 0;
  std::size_t total_gold = 0;
  std::map<int, double> gold_length_histogram;
};

// Reads a JSON-Lines corpus: one {"id","text","gold"} object per line.
// Blank lines are skipped. Throws InputError naming the 1-based line number
// of a malformed line, or naming the id of a duplicate record.
std::vector<CorpusRecord> LoadCorpus(const std::filesystem::path& path);
std::vector<CorpusRecord> ParseCorpus(std::istream& in);

void WriteCorpus(std::ostream& out, std::span<const CorpusRecord> records);

std::size_t CountWhitespaceWords(std::string_view text);

// `candidates_per_doc`, when given, must be parallel to `corpus`; it feeds
// total_candidates (left at 0 otherwise). Throws std::invalid_argument on
// an empty corpus.
CorpusStats ComputeStats(std::span<const CorpusRecord> corpus,
                         std::optional<std::span<const std::size_t>> candidates_per_doc = std::nullopt);

nlohmann::json ToJson(const CorpusStats& stats);

}  // namespace promptrank
