#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptrank/corpus.h"
#include "promptrank/evaluation.h"
#include "promptrank/pipeline.h"

namespace promptrank {

enum class SweepParameter { kAlpha, kGamma, kTemplate };

// "alpha" | "gamma" | "template"; throws InputError otherwise.
SweepParameter ParseSweepParameter(std::string_view name);
std::string_view ToString(SweepParameter p);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::kAlpha;
  std::vector<std::string> values;  // raw, before expansion
  std::vector<std::filesystem::path> corpus_paths;
  std::vector<std::size_t> ks = kDefaultKs;

  // Throws InputError on empty values, corpora or ks.
  void Validate() const;
};

// Numeric values may be "lo:hi:step" ranges (inclusive, e.g. "0.2:1.0:0.1"
// gives nine values). Template values may name a length group ("len5")
// which expands to its members in registry order. Throws InputError on a
// malformed range.
std::vector<std::string> ExpandSweepValues(SweepParameter p, std::span<const std::string> raw,
                                           const TemplateRegistry& registry = BuiltinRegistry());

struct SweepDataset {
  std::string name;
  std::vector<CorpusRecord> records;
};

struct SweepRow {
  std::string value;
  std::string dataset;
  std::size_t k = 0;
  std::optional<PrfScores> scores;  // nullopt: the run failed
  std::string error;
};

// One evaluation per (dataset, value), rows ordered by dataset, value, K.
// Tagging and candidates are computed once per dataset; alpha and gamma
// sweeps also score every document once and only re-rank per value. A
// failed run marks its cells and the sweep goes on.
std::vector<SweepRow> RunSweep(const Extractor& extractor, SweepParameter p, std::span<const std::string> values,
                               std::span<const SweepDataset> datasets, std::span<const std::size_t> ks);

// Header "value,dataset,k,precision,recall,f1"; failed cells print
// "failed" in the three score columns.
void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace promptrank
