#include "promptrank/corpus.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "promptrank/errors.h"
#include "promptrank/utf8.h"

namespace promptrank {
namespace {

using nlohmann::json;

[[noreturn]] void Malformed(std::size_t line_no, const std::string& what) {
  throw InputError("corpus line " + std::to_string(line_no) + ": " + what);
}

CorpusRecord ParseRecord(const std::string& line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    Malformed(line_no, std::string("invalid JSON (") + e.what() + ")");
  }
  if (!obj.is_object()) Malformed(line_no, "expected a JSON object");

  auto string_field = [&](const char* key) -> std::string {
    auto it = obj.find(key);
    if (it == obj.end()) Malformed(line_no, std::string("missing \"") + key + "\" field");
    if (!it->is_string()) Malformed(line_no, std::string("\"") + key + "\" must be a string");
    return it->get<std::string>();
  };

  CorpusRecord rec;
  rec.id = string_field("id");
  rec.text = string_field("text");
  if (rec.id.empty()) Malformed(line_no, "empty id");
  if (rec.text.empty()) Malformed(line_no, "empty text");

  auto gold = obj.find("gold");
  if (gold == obj.end()) Malformed(line_no, "missing \"gold\" field");
  if (!gold->is_array()) Malformed(line_no, "\"gold\" must be an array");
  for (const auto& g : *gold) {
    if (!g.is_string()) Malformed(line_no, "\"gold\" entries must be strings");
    rec.gold.push_back(g.get<std::string>());
  }
  return rec;
}

bool IsBlank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

std::vector<CorpusRecord> ParseCorpus(std::istream& in) {
  std::vector<CorpusRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    CorpusRecord rec = ParseRecord(line, line_no);
    if (!seen.insert(rec.id).second) {
      throw InputError("corpus line " + std::to_string(line_no) + ": duplicate id \"" + rec.id + "\"");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<CorpusRecord> LoadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  return ParseCorpus(in);
}

void WriteCorpus(std::ostream& out, std::span<const CorpusRecord> records) {
  for (const auto& r : records) {
    json obj = {{"id", r.id}, {"text", r.text}, {"gold", r.gold}};
    out << obj.dump() << '\n';
  }
}

std::size_t CountWhitespaceWords(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const bool space = utf8::IsSpace(utf8::Decode(text, pos));
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

CorpusStats ComputeStats(std::span<const CorpusRecord> corpus,
                         std::optional<std::span<const std::size_t>> candidates_per_doc) {
  if (corpus.empty()) throw std::invalid_argument("ComputeStats: empty corpus");
  if (candidates_per_doc && candidates_per_doc->size() != corpus.size()) {
    throw std::invalid_argument("ComputeStats: candidate counts not parallel to corpus");
  }

  CorpusStats stats;
  stats.n_doc = corpus.size();
  std::size_t total_words = 0;
  std::map<int, std::size_t> buckets;
  for (const auto& rec : corpus) {
    total_words += CountWhitespaceWords(rec.text);
    for (const auto& g : rec.gold) {
      const auto words = static_cast<int>(CountWhitespaceWords(g));
      if (words == 0) continue;
      ++buckets[std::min(words, 5)];
      ++stats.total_gold;
    }
  }
  stats.avg_len_words = static_cast<double>(total_words) / static_cast<double>(stats.n_doc);
  if (candidates_per_doc) {
    for (std::size_t n : *candidates_per_doc) stats.total_candidates += n;
  }
  for (const auto& [len, n] : buckets) {
    stats.gold_length_histogram[len] =
        100.0 * static_cast<double>(n) / static_cast<double>(stats.total_gold);
  }
  return stats;
}

nlohmann::json ToJson(const CorpusStats& stats) {
  json hist = json::object();
  for (const auto& [len, pct] : stats.gold_length_histogram) {
    hist[len >= 5 ? ">=5" : std::to_string(len)] = pct;
  }
  return {{"n_doc", stats.n_doc},
          {"avg_len_words", stats.avg_len_words},
          {"total_candidates", stats.total_candidates},
          {"total_gold", stats.total_gold},
          {"gold_length_histogram", hist}};
}

}  // namespace promptrank
