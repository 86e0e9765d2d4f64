#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptrank/corpus.h"
#include "promptrank/evaluation.h"
#include "promptrank/pipeline.h"

namespace promptrank {

struct RankedPhrase {
  std::string phrase;
  double p = 0.0;
  double r = 0.0;
  double s = 0.0;

  bool operator==(const RankedPhrase&) const = default;
};

// One line of a predictions file:
// {"id": .., "ranked": [{"phrase", "p", "r", "s"}, ...]} plus "error" for
// documents that failed.
struct PredictionRecord {
  std::string id;
  std::vector<RankedPhrase> ranked;
  std::optional<std::string> error;

  bool operator==(const PredictionRecord&) const = default;
};

PredictionRecord ToPredictionRecord(const DocumentOutcome& outcome);

void WritePredictions(std::ostream& out, std::span<const PredictionRecord> records);
void WritePredictions(std::ostream& out, std::span<const DocumentOutcome> outcomes);

// Throws InputError naming the 1-based line of a malformed record.
std::vector<PredictionRecord> ParsePredictions(std::istream& in);
std::vector<PredictionRecord> LoadPredictions(const std::filesystem::path& path);

// Scores cached predictions against `corpus`, matching records by id.
// Failed records are skipped like in a fresh run. Throws InputError when a
// corpus document has no prediction record.
EvalReport EvaluatePredictions(std::span<const PredictionRecord> predictions, std::span<const CorpusRecord> corpus,
                               std::span<const std::size_t> ks, Averaging averaging = Averaging::kMicro,
                               bool filter_absent_gold = false);

}  // namespace promptrank
