#include "cli.h"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "promptrank/config.h"
#include "promptrank/corpus.h"
#include "promptrank/errors.h"
#include "promptrank/pipeline.h"
#include "promptrank/predictions.h"
#include "promptrank/sweep.h"

namespace promptrank::cli {
namespace {

// Config sources collected while parsing; applied as defaults < file < flags.
struct ConfigFlags {
  std::string config_file;
  bool print_config = false;
  std::vector<std::pair<std::string, std::string>> overrides;

  void Register(CLI::App* app) {
    static const std::pair<const char*, const char*> kValueFlags[] = {
        {"--alpha", "alpha"},
        {"--gamma", "gamma"},
        {"--template", "template"},
        {"--top-k", "top_k"},
        {"--ks", "ks"},
        {"--encoder-max-tokens", "encoder_max_tokens"},
        {"--batch-size", "batch_size"},
        {"--workers", "workers"},
        {"--backend", "backend"},
        {"--weights", "weights"},
        {"--tagger-weights", "tagger_weights"},
        {"--templates", "templates_file"},
        {"--position-cap", "position_cap"},
        {"--max-candidate-words", "max_candidate_words"},
    };
    for (const auto& [flag, key] : kValueFlags) {
      app->add_option_function<std::string>(
             flag, [this, k = std::string(key)](const std::string& v) { overrides.emplace_back(k, v); },
             "config key '" + std::string(key) + "'")
          ->group("Configuration");
    }
    auto set = [this](std::string key, std::string value) {
      return [this, key = std::move(key), value = std::move(value)](std::int64_t) {
        overrides.emplace_back(key, value);
      };
    };
    app->add_flag_function("--no-position", set("use_position", "false"), "rank by p_c only")
        ->group("Configuration");
    app->add_flag_function("--macro", set("averaging", "macro"), "macro-average F1 over documents")
        ->group("Configuration");
    app->add_flag_function("--include-eos", set("include_eos", "true"), "score the end-of-sequence token")
        ->group("Configuration");
    app->add_flag_function("--filter-absent-gold", set("filter_absent_gold", "true"),
                           "drop gold phrases absent from the text")
        ->group("Configuration");
    app->add_option("--config", config_file, "flat key = value config file")->group("Configuration");
    app->add_flag("--print-config", print_config, "print the effective config and exit")->group("Configuration");
  }

  PipelineConfig Build() const {
    PipelineConfig cfg;
    if (!config_file.empty()) ApplyConfigFile(cfg, config_file);
    for (const auto& [k, v] : overrides) ApplyConfigValue(cfg, k, v);
    cfg.Validate();
    return cfg;
  }
};

std::string ReadInput(const std::string& path, std::istream& in) {
  if (path.empty() || path == "-") return {std::istreambuf_iterator<char>(in), {}};
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read input file " + path);
  return {std::istreambuf_iterator<char>(f), {}};
}

void PrintDiagnostics(const std::vector<std::string>& diagnostics, std::ostream& err) {
  for (const auto& d : diagnostics) err << "promptrank: " << d << '\n';
}

void PrintResult(const ExtractionResult& result, bool json, std::ostream& out, std::ostream& err) {
  PrintDiagnostics(result.diagnostics, err);
  if (!json) {
    for (const auto& c : result.ranked) {
      if (c.is_prediction) out << c.candidate.surface << '\n';
    }
    return;
  }
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& c : result.ranked) {
    ranked.push_back({{"phrase", c.candidate.surface},
                      {"rank", c.rank},
                      {"first_pos", c.candidate.first_pos},
                      {"p", c.p_c},
                      {"r", c.r_c},
                      {"s", c.s_c},
                      {"prediction", c.is_prediction}});
  }
  out << nlohmann::json{{"ranked", ranked}, {"diagnostics", result.diagnostics}}.dump(2) << '\n';
}

int Extract(const PipelineConfig& cfg, const std::string& input, bool json, bool pretagged, std::istream& in,
            std::ostream& out, std::ostream& err) {
  const std::string text = ReadInput(input, in);
  const Extractor extractor(cfg);
  if (!pretagged) {
    PrintResult(extractor.Extract(text), json, out, err);
    return kExitOk;
  }
  std::istringstream lines(text);
  const auto docs = ReadPretagged(lines);
  auto session = extractor.model().NewSession();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i > 0 && !json) out << '\n';
    PrintResult(extractor.ExtractPrepared(extractor.PrepareTagged(std::to_string(i), docs[i]), *session), json, out,
                err);
  }
  return kExitOk;
}

int Eval(const PipelineConfig& cfg, const std::string& corpus_path, const std::string& cached,
         const std::string& save, std::ostream& out, std::ostream& err) {
  const auto corpus = LoadCorpus(corpus_path);
  std::vector<PredictionRecord> records;
  EvalReport report;
  if (!cached.empty()) {
    records = LoadPredictions(cached);
    report = EvaluatePredictions(records, corpus, cfg.ks, cfg.averaging, cfg.filter_absent_gold);
  } else {
    const Extractor extractor(cfg);
    const CorpusRun run = extractor.RunCorpus(corpus);
    for (const auto& d : run.documents) records.push_back(ToPredictionRecord(d));
    report = run.report;
    if (!save.empty()) {
      std::ofstream f(save);
      if (!f) throw InputError("cannot write predictions file " + save);
      WritePredictions(f, records);
    }
  }
  std::size_t failures = 0;
  for (const auto& r : records) {
    if (!r.error) continue;
    ++failures;
    err << "promptrank: document " << r.id << " failed: " << *r.error << '\n';
  }
  if (failures > 0) err << "promptrank: " << failures << " of " << corpus.size() << " documents failed\n";
  nlohmann::json j = ToJson(report);
  j["failures"] = failures;
  out << j.dump(2) << '\n';
  // The report over the surviving documents is still printed.
  return failures > 0 ? kExitBackend : kExitOk;
}

int Sweep(const PipelineConfig& cfg, SweepSpec spec, const std::string& out_path, std::ostream& out) {
  spec.ks = cfg.ks;
  spec.Validate();
  const auto values = ExpandSweepValues(spec.parameter, spec.values);
  std::vector<SweepDataset> datasets;
  for (const auto& p : spec.corpus_paths) datasets.push_back({p.stem().string(), LoadCorpus(p)});
  const Extractor extractor(cfg);
  const auto rows = RunSweep(extractor, spec.parameter, values, datasets, spec.ks);
  if (out_path.empty()) {
    WriteSweepCsv(out, rows);
  } else {
    std::ofstream f(out_path);
    if (!f) throw InputError("cannot write " + out_path);
    WriteSweepCsv(f, rows);
  }
  return kExitOk;
}

int ScoreDump(const PipelineConfig& cfg, const std::string& input, bool raw, std::istream& in, std::ostream& out,
              std::ostream& err) {
  const std::string text = ReadInput(input, in);
  const Extractor extractor(cfg);
  const ExtractionResult result = extractor.Extract(text);
  PrintDiagnostics(result.diagnostics, err);
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  if (!result.ranked.empty()) {
    const auto [lo, hi] = std::minmax_element(result.ranked.begin(), result.ranked.end(),
                                              [](const auto& a, const auto& b) { return a.s_c < b.s_c; });
    const double min = lo->s_c;
    const double span = hi->s_c - min;
    for (const auto& c : result.ranked) {
      scores[c.candidate.surface] = raw ? c.s_c : span > 0.0 ? (c.s_c - min) / span : 1.0;
    }
  }
  out << scores.dump(2) << '\n';
  return kExitOk;
}

int Stats(const PipelineConfig& cfg, const std::string& corpus_path, std::ostream& out) {
  const auto corpus = LoadCorpus(corpus_path);
  const auto tagger = PerceptronTagger::Load(cfg.tagger_weights.empty() ? DefaultTaggerWeightsPath()
                                                                         : cfg.tagger_weights);
  std::vector<std::size_t> counts;
  counts.reserve(corpus.size());
  for (const auto& r : corpus) {
    counts.push_back(ExtractCandidates(Preprocess(r.text, tagger, cfg.position_cap), cfg.max_candidate_words).size());
  }
  out << ToJson(ComputeStats(corpus, std::span<const std::size_t>(counts))).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised keyphrase extraction with encoder-decoder prompts", "promptrank"};
  app.require_subcommand(1);

  ConfigFlags flags;
  std::string input;
  std::string corpus;
  bool json = false;
  bool pretagged = false;
  bool raw = false;
  std::string cached;
  std::string save;
  std::string sweep_param;
  SweepSpec spec;
  std::vector<std::string> corpora;
  std::string sweep_out;

  auto* extract = app.add_subcommand("extract", "print the top-K keyphrases of one document");
  extract->add_option("input", input, "text file ('-' or omitted: stdin)");
  extract->add_flag("--json", json, "emit every scored candidate as JSON");
  extract->add_flag("--pretagged", pretagged, "input is token<TAB>tag lines, blank line between documents");

  auto* eval = app.add_subcommand("eval", "evaluate F1@K on a JSONL corpus");
  eval->add_option("corpus", corpus, "JSONL corpus")->required();
  eval->add_option("--predictions", cached, "evaluate cached predictions instead of scoring");
  eval->add_option("--save-predictions", save, "write per-document predictions (JSONL)");

  auto* sweep = app.add_subcommand("sweep", "ablate alpha, gamma or the template; CSV output");
  sweep->add_option("--param", sweep_param, "alpha | gamma | template")->required();
  sweep->add_option("--values", spec.values, "values, lo:hi:step ranges or template groups")->required();
  sweep->add_option("--corpus", corpora, "JSONL corpora")->required();
  sweep->add_option("--out", sweep_out, "CSV path (default stdout)");

  auto* dump = app.add_subcommand("score-dump", "per-candidate scores of one document, min-max normalized");
  dump->add_option("input", input, "text file ('-' or omitted: stdin)");
  dump->add_flag("--raw", raw, "emit unnormalized s_c");

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("corpus", corpus, "JSONL corpus")->required();

  for (auto* sub : {extract, eval, sweep, dump, stats}) flags.Register(sub);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
  }

  try {
    const PipelineConfig cfg = flags.Build();
    if (flags.print_config) {
      out << FormatConfig(cfg);
      return kExitOk;
    }
    if (extract->parsed()) return Extract(cfg, input, json, pretagged, in, out, err);
    if (eval->parsed()) return Eval(cfg, corpus, cached, save, out, err);
    if (sweep->parsed()) {
      spec.parameter = ParseSweepParameter(sweep_param);
      spec.corpus_paths.assign(corpora.begin(), corpora.end());
      return Sweep(cfg, std::move(spec), sweep_out, out);
    }
    if (dump->parsed()) return ScoreDump(cfg, input, raw, in, out, err);
    return Stats(cfg, corpus, out);
  } catch (const BackendError& e) {
    err << "promptrank: backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const InputError& e) {
    err << "promptrank: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "promptrank: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "promptrank: internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace promptrank::cli
