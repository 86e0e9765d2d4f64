#include "promptrank/config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "promptrank/errors.h"

namespace promptrank {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void Bad(std::string_view key, std::string_view value, std::string_view want) {
  throw InputError("config key '" + std::string(key) + "': expected " + std::string(want) + ", got '" +
                   std::string(value) + "'");
}

double ParseDouble(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) Bad(key, v, "a number");
  return out;
}

std::size_t ParseCount(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) Bad(key, v, "a non-negative integer");
  return out;
}

bool ParseBool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  Bad(key, v, "true or false");
}

std::string FormatDouble(double d) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, ptr);
}

}  // namespace

const std::vector<std::string_view>& ConfigKeys() {
  static const std::vector<std::string_view> keys{
      "alpha",   "gamma",   "template",       "use_position",   "top_k",        "ks",
      "encoder_max_tokens", "batch_size",     "include_eos",    "workers",      "backend",
      "weights", "tagger_weights", "templates_file", "position_cap", "max_candidate_words",
      "averaging", "filter_absent_gold"};
  return keys;
}

std::vector<std::size_t> ParseKs(std::string_view text) {
  std::vector<std::size_t> ks;
  while (true) {
    const auto comma = text.find(',');
    const auto item = Trim(text.substr(0, comma));
    const std::size_t k = ParseCount("ks", item);
    if (k == 0) Bad("ks", item, "K >= 1");
    ks.push_back(k);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return ks;
}

void ApplyConfigValue(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  value = Trim(value);
  if (key == "alpha") {
    cfg.scorer.alpha = ParseDouble(key, value);
  } else if (key == "gamma") {
    cfg.ranker.gamma = ParseDouble(key, value);
  } else if (key == "template") {
    if (value.empty()) Bad(key, value, "a template id");
    cfg.scorer.template_id = std::string(value);
  } else if (key == "use_position") {
    cfg.ranker.use_position = ParseBool(key, value);
  } else if (key == "top_k") {
    cfg.ranker.top_k = ParseCount(key, value);
  } else if (key == "ks") {
    cfg.ks = ParseKs(value);
  } else if (key == "encoder_max_tokens") {
    cfg.scorer.encoder_max_tokens = ParseCount(key, value);
  } else if (key == "batch_size") {
    cfg.scorer.batch_size = ParseCount(key, value);
  } else if (key == "include_eos") {
    cfg.scorer.include_eos = ParseBool(key, value);
  } else if (key == "workers") {
    cfg.workers = ParseCount(key, value);
  } else if (key == "backend") {
    if (value.empty()) Bad(key, value, "a backend family");
    cfg.backend.family = std::string(value);
  } else if (key == "weights") {
    cfg.backend.weights = std::string(value);
  } else if (key == "tagger_weights") {
    cfg.tagger_weights = std::string(value);
  } else if (key == "templates_file") {
    cfg.templates_file = std::string(value);
  } else if (key == "position_cap") {
    cfg.position_cap = ParseCount(key, value);
  } else if (key == "max_candidate_words") {
    cfg.max_candidate_words = ParseCount(key, value);
  } else if (key == "averaging") {
    if (value == "micro") {
      cfg.averaging = Averaging::kMicro;
    } else if (value == "macro") {
      cfg.averaging = Averaging::kMacro;
    } else {
      Bad(key, value, "micro or macro");
    }
  } else if (key == "filter_absent_gold") {
    cfg.filter_absent_gold = ParseBool(key, value);
  } else {
    throw InputError("unknown config key '" + std::string(key) + "'");
  }
}

void ApplyConfig(PipelineConfig& cfg, std::istream& in) {
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      ApplyConfigValue(cfg, Trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void ApplyConfigFile(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  ApplyConfig(cfg, in);
}

std::string FormatConfig(const PipelineConfig& cfg) {
  std::ostringstream out;
  std::string ks;
  for (std::size_t k : cfg.ks) ks += (ks.empty() ? "" : ",") + std::to_string(k);
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "alpha = " << FormatDouble(cfg.scorer.alpha) << '\n'
      << "gamma = " << FormatDouble(cfg.ranker.gamma) << '\n'
      << "template = " << cfg.scorer.template_id << '\n'
      << "use_position = " << b(cfg.ranker.use_position) << '\n'
      << "top_k = " << cfg.ranker.top_k << '\n'
      << "ks = " << ks << '\n'
      << "encoder_max_tokens = " << cfg.scorer.encoder_max_tokens << '\n'
      << "batch_size = " << cfg.scorer.batch_size << '\n'
      << "include_eos = " << b(cfg.scorer.include_eos) << '\n'
      << "workers = " << cfg.workers << '\n'
      << "backend = " << cfg.backend.family << '\n'
      << "weights = " << cfg.backend.weights.string() << '\n'
      << "tagger_weights = " << cfg.tagger_weights.string() << '\n'
      << "templates_file = " << cfg.templates_file.string() << '\n'
      << "position_cap = " << cfg.position_cap << '\n'
      << "max_candidate_words = " << cfg.max_candidate_words << '\n'
      << "averaging = " << (cfg.averaging == Averaging::kMacro ? "macro" : "micro") << '\n'
      << "filter_absent_gold = " << b(cfg.filter_absent_gold) << '\n';
  return out.str();
}

}  // namespace promptrank
