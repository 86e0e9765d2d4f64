#include "promptrank/predictions.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "promptrank/errors.h"
#include "promptrank/word_tokenizer.h"

namespace promptrank {

PredictionRecord ToPredictionRecord(const DocumentOutcome& outcome) {
  PredictionRecord rec;
  rec.id = outcome.id;
  rec.error = outcome.error;
  rec.ranked.reserve(outcome.ranked.size());
  for (const auto& c : outcome.ranked) rec.ranked.push_back({c.candidate.surface, c.p_c, c.r_c, c.s_c});
  return rec;
}

void WritePredictions(std::ostream& out, std::span<const PredictionRecord> records) {
  for (const auto& rec : records) {
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto& r : rec.ranked) ranked.push_back({{"phrase", r.phrase}, {"p", r.p}, {"r", r.r}, {"s", r.s}});
    nlohmann::json j{{"id", rec.id}, {"ranked", std::move(ranked)}};
    if (rec.error) j["error"] = *rec.error;
    out << j.dump() << '\n';
  }
}

void WritePredictions(std::ostream& out, std::span<const DocumentOutcome> outcomes) {
  std::vector<PredictionRecord> records;
  records.reserve(outcomes.size());
  for (const auto& o : outcomes) records.push_back(ToPredictionRecord(o));
  WritePredictions(out, records);
}

std::vector<PredictionRecord> ParsePredictions(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PredictionRecord rec;
      rec.id = j.at("id").get<std::string>();
      for (const auto& r : j.at("ranked")) {
        rec.ranked.push_back(
            {r.at("phrase").get<std::string>(), r.at("p").get<double>(), r.at("r").get<double>(), r.at("s").get<double>()});
      }
      if (j.contains("error")) rec.error = j["error"].get<std::string>();
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PredictionRecord> LoadPredictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open predictions file " + path.string());
  return ParsePredictions(in);
}

EvalReport EvaluatePredictions(std::span<const PredictionRecord> predictions, std::span<const CorpusRecord> corpus,
                               std::span<const std::size_t> ks, Averaging averaging, bool filter_absent_gold) {
  std::unordered_map<std::string_view, const PredictionRecord*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.id, &p);

  std::vector<std::vector<std::string>> pred;
  std::vector<std::vector<std::string>> gold;
  for (const auto& doc : corpus) {
    auto it = by_id.find(doc.id);
    if (it == by_id.end()) throw InputError("no cached prediction for document " + doc.id);
    const PredictionRecord& rec = *it->second;
    if (rec.error) continue;
    std::vector<std::string> phrases;
    phrases.reserve(rec.ranked.size());
    for (const auto& r : rec.ranked) phrases.push_back(NormalizePhrase(r.phrase));
    pred.push_back(DedupPreservingOrder(phrases));
    const auto tokens = filter_absent_gold ? Tokenize(doc.text) : std::vector<std::string>{};
    gold.push_back(NormalizeGold(doc.gold, tokens, filter_absent_gold));
  }
  return Evaluate(pred, gold, ks, averaging);
}

}  // namespace promptrank
