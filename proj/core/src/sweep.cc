#include "promptrank/sweep.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "promptrank/errors.h"

namespace promptrank {
namespace {

double ParseNumber(std::string_view s) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out)) {
    throw InputError("sweep value '" + std::string(s) + "' is not a number");
  }
  return out;
}

// 12 significant digits hides the drift of lo + i * step.
std::string FormatValue(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string FormatScore(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> ExpandRange(std::string_view text) {
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos || text.find(':', c2 + 1) != std::string_view::npos) {
    throw InputError("range '" + std::string(text) + "' must be lo:hi:step");
  }
  const double lo = ParseNumber(text.substr(0, c1));
  const double hi = ParseNumber(text.substr(c1 + 1, c2 - c1 - 1));
  const double step = ParseNumber(text.substr(c2 + 1));
  if (step <= 0.0 || hi < lo) throw InputError("range '" + std::string(text) + "' is empty or has step <= 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(FormatValue(lo + static_cast<double>(i) * step));
  return out;
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Evaluation {
  std::optional<EvalReport> report;
  std::string error;
};

void EmitRows(std::vector<SweepRow>& rows, const std::string& value, const std::string& dataset,
              std::span<const std::size_t> ks, const Evaluation& eval) {
  for (std::size_t k : ks) {
    SweepRow row{value, dataset, k, std::nullopt, eval.error};
    if (eval.report) row.scores = eval.report->per_k.at(k);
    rows.push_back(std::move(row));
  }
}

}  // namespace

SweepParameter ParseSweepParameter(std::string_view name) {
  if (name == "alpha") return SweepParameter::kAlpha;
  if (name == "gamma") return SweepParameter::kGamma;
  if (name == "template") return SweepParameter::kTemplate;
  throw InputError("unknown sweep parameter '" + std::string(name) + "' (alpha, gamma or template)");
}

std::string_view ToString(SweepParameter p) {
  switch (p) {
    case SweepParameter::kAlpha: return "alpha";
    case SweepParameter::kGamma: return "gamma";
    case SweepParameter::kTemplate: return "template";
  }
  return "?";
}

void SweepSpec::Validate() const {
  if (values.empty()) throw InputError("sweep needs at least one value");
  if (corpus_paths.empty()) throw InputError("sweep needs at least one corpus");
  if (ks.empty()) throw InputError("sweep needs at least one K");
}

std::vector<std::string> ExpandSweepValues(SweepParameter p, std::span<const std::string> raw,
                                           const TemplateRegistry& registry) {
  std::vector<std::string> out;
  for (const auto& v : raw) {
    if (p == SweepParameter::kTemplate) {
      if (registry.Find(v) == nullptr) {
        auto group = registry.Group(v);
        if (!group.empty()) {
          out.insert(out.end(), group.begin(), group.end());
          continue;
        }
      }
      out.push_back(v);  // unknown ids fail their own cells later
    } else if (v.find(':') != std::string::npos) {
      auto range = ExpandRange(v);
      out.insert(out.end(), range.begin(), range.end());
    } else {
      out.push_back(v);
    }
  }
  if (out.empty()) throw InputError("sweep values expand to nothing");
  return out;
}

std::vector<SweepRow> RunSweep(const Extractor& extractor, SweepParameter p, std::span<const std::string> values,
                               std::span<const SweepDataset> datasets, std::span<const std::size_t> ks) {
  const PipelineConfig& base = extractor.config();
  std::vector<SweepRow> rows;

  for (const auto& ds : datasets) {
    const std::size_t n = ds.records.size();
    std::vector<PreparedDocument> docs(n);
    std::vector<std::vector<std::string>> gold(n);
    std::vector<std::optional<std::string>> prep_error(n);
    for (std::size_t i = 0; i < n; ++i) {
      try {
        docs[i] = extractor.Prepare(ds.records[i].id, ds.records[i].text);
        gold[i] = extractor.NormalizedGold(ds.records[i], docs[i]);
      } catch (const std::exception& e) {
        prep_error[i] = e.what();
      }
    }

    // Scores every prepared document with `tmpl`; failed documents get nullopt.
    auto score_all = [&](const PromptTemplate& tmpl, const ScorerConfig& scorer) {
      std::vector<std::optional<DocumentLogProbs>> lps(n);
      ParallelForDocuments(n, base.workers, extractor.model(), [&](std::size_t i, Seq2SeqSession& session) {
        if (prep_error[i]) return;
        try {
          lps[i] = docs[i].candidates.empty() ? DocumentLogProbs{} : extractor.Score(docs[i], tmpl, session, scorer);
        } catch (const std::exception&) {
        }
      });
      return lps;
    };

    auto evaluate = [&](const std::vector<std::optional<DocumentLogProbs>>& lps, double alpha,
                        const RankerConfig& ranker) {
      Evaluation out;
      try {
        ranker.Validate();
        if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
        std::vector<std::vector<std::string>> pred;
        std::vector<std::vector<std::string>> kept_gold;
        for (std::size_t i = 0; i < n; ++i) {
          if (!lps[i]) continue;
          pred.push_back(NormalizedPredictions(extractor.RankScored(docs[i], *lps[i], alpha, ranker).ranked));
          kept_gold.push_back(gold[i]);
        }
        if (pred.empty()) throw std::runtime_error("every document failed");
        out.report = Evaluate(pred, kept_gold, ks, base.averaging);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      return out;
    };

    if (p == SweepParameter::kTemplate) {
      for (const auto& v : values) {
        Evaluation eval;
        try {
          ScorerConfig scorer = base.scorer;
          scorer.template_id = v;
          eval = evaluate(score_all(extractor.ResolveTemplate(v), scorer), scorer.alpha, base.ranker);
        } catch (const std::exception& e) {
          eval.error = e.what();
        }
        EmitRows(rows, v, ds.name, ks, eval);
      }
      continue;
    }

    const auto lps = score_all(extractor.ResolveTemplate(base.scorer.template_id), base.scorer);
    for (const auto& v : values) {
      Evaluation eval;
      try {
        const double x = ParseNumber(v);
        RankerConfig ranker = base.ranker;
        double alpha = base.scorer.alpha;
        (p == SweepParameter::kAlpha ? alpha : ranker.gamma) = x;
        eval = evaluate(lps, alpha, ranker);
      } catch (const std::exception& e) {
        eval.error = e.what();
      }
      EmitRows(rows, v, ds.name, ks, eval);
    }
  }
  return rows;
}

void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "value,dataset,k,precision,recall,f1\n";
  for (const auto& r : rows) {
    out << CsvField(r.value) << ',' << CsvField(r.dataset) << ',' << r.k << ',';
    if (r.scores) {
      out << FormatScore(r.scores->precision) << ',' << FormatScore(r.scores->recall) << ','
          << FormatScore(r.scores->f1) << '\n';
    } else {
      out << "failed,failed,failed\n";
    }
  }
}

}  // namespace promptrank
