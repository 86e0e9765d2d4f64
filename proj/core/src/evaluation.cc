#include "promptrank/evaluation.h"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "promptrank/porter_stemmer.h"
#include "promptrank/utf8.h"

namespace promptrank {

std::string NormalizePhrase(std::string_view phrase) {
  const std::string lower = utf8::ToLowerAscii(phrase);
  std::string out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += PorterStem(word);
    word.clear();
  };
  for (std::size_t pos = 0; pos < lower.size();) {
    const std::size_t begin = pos;
    if (utf8::IsSpace(utf8::Decode(lower, pos))) {
      flush();
    } else {
      word.append(lower, begin, pos - begin);
    }
  }
  flush();
  if (out.empty()) throw std::invalid_argument("cannot normalize an empty phrase");
  return out;
}

std::vector<std::string> DedupPreservingOrder(std::span<const std::string> phrases) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : phrases) {
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

bool PhraseOccursIn(std::string_view normalized_phrase, std::span<const std::string> normalized_words) {
  std::vector<std::string_view> words;
  for (std::size_t start = 0; start <= normalized_phrase.size();) {
    const auto space = normalized_phrase.find(' ', start);
    const auto end = space == std::string_view::npos ? normalized_phrase.size() : space;
    if (end > start) words.push_back(normalized_phrase.substr(start, end - start));
    start = end + 1;
  }
  if (words.empty() || words.size() > normalized_words.size()) return false;
  for (std::size_t i = 0; i + words.size() <= normalized_words.size(); ++i) {
    if (std::equal(words.begin(), words.end(), normalized_words.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

double F1(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

namespace {

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalReport Evaluate(std::span<const std::vector<std::string>> predictions,
                    std::span<const std::vector<std::string>> gold, std::span<const std::size_t> ks,
                    Averaging averaging) {
  if (predictions.size() != gold.size()) throw std::invalid_argument("predictions and gold differ in length");
  if (ks.empty()) throw std::invalid_argument("at least one cutoff K is required");
  for (std::size_t k : ks) {
    if (k == 0) throw std::invalid_argument("cutoff K must be >= 1");
  }

  EvalReport report;
  report.averaging = averaging;
  report.documents = predictions.size();
  std::map<std::size_t, PrfScores> macro_sums;

  for (std::size_t d = 0; d < predictions.size(); ++d) {
    const std::vector<std::string> ranked = DedupPreservingOrder(predictions[d]);
    const std::unordered_set<std::string> gold_set(gold[d].begin(), gold[d].end());
    for (std::size_t k : ks) {
      const std::size_t take = std::min(k, ranked.size());
      std::size_t correct = 0;
      for (std::size_t i = 0; i < take; ++i) correct += gold_set.contains(ranked[i]) ? 1 : 0;
      MatchCounts& c = report.counts[k];
      c.correct += correct;
      c.predicted += take;
      c.gold += gold_set.size();
      if (averaging == Averaging::kMacro) {
        const double p = Ratio(correct, take);
        const double r = Ratio(correct, gold_set.size());
        PrfScores& s = macro_sums[k];
        s.precision += p;
        s.recall += r;
        s.f1 += F1(p, r);
      }
    }
  }

  for (std::size_t k : ks) {
    const MatchCounts& c = report.counts[k];
    PrfScores s;
    if (averaging == Averaging::kMicro) {
      s.precision = Ratio(c.correct, c.predicted);
      s.recall = Ratio(c.correct, c.gold);
      s.f1 = F1(s.precision, s.recall);
    } else if (!predictions.empty()) {
      const double n = static_cast<double>(predictions.size());
      s.precision = macro_sums[k].precision / n;
      s.recall = macro_sums[k].recall / n;
      s.f1 = macro_sums[k].f1 / n;
    }
    report.per_k[k] = s;
  }
  return report;
}

nlohmann::json ToJson(const EvalReport& report) {
  nlohmann::json j;
  j["averaging"] = report.averaging == Averaging::kMicro ? "micro" : "macro";
  j["documents"] = report.documents;
  j["k"] = nlohmann::json::object();
  j["counts"] = nlohmann::json::object();
  for (const auto& [k, s] : report.per_k) {
    j["k"][std::to_string(k)] = {{"p", s.precision}, {"r", s.recall}, {"f1", s.f1}};
  }
  for (const auto& [k, c] : report.counts) {
    j["counts"][std::to_string(k)] = {{"correct", c.correct}, {"predicted", c.predicted}, {"gold", c.gold}};
  }
  return j;
}

EvalReport EvalReportFromJson(const nlohmann::json& j) {
  EvalReport r;
  r.averaging = j.value("averaging", std::string("micro")) == "macro" ? Averaging::kMacro : Averaging::kMicro;
  r.documents = j.value("documents", std::size_t{0});
  for (const auto& [k, v] : j.at("k").items()) {
    r.per_k[std::stoul(k)] = {v.at("p").get<double>(), v.at("r").get<double>(), v.at("f1").get<double>()};
  }
  if (j.contains("counts")) {
    for (const auto& [k, v] : j["counts"].items()) {
      r.counts[std::stoul(k)] = {v.at("correct").get<std::size_t>(), v.at("predicted").get<std::size_t>(),
                                 v.at("gold").get<std::size_t>()};
    }
  }
  return r;
}

}  // namespace promptrank
