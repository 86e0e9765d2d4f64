#include "promptrank/stub_backend.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "promptrank/errors.h"
#include "promptrank/utf8.h"

namespace promptrank {
namespace {

constexpr TokenId kStartId = 0;
constexpr TokenId kEosId = 1;
constexpr TokenId kFirstWordId = 2;

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool IsWordByte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80 || c == '-' || c == '\''; }

class StubTokenizer : public SubwordTokenizer {
 public:
  explicit StubTokenizer(std::size_t vocab) : vocab_(vocab) {}

  std::vector<TokenId> Encode(std::string_view text) const override {
    std::vector<TokenId> ids;
    const std::string lower = utf8::ToLowerAscii(text);
    std::size_t i = 0;
    while (i < lower.size()) {
      const auto c = static_cast<unsigned char>(lower[i]);
      if (std::isspace(c) != 0) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      if (IsWordByte(c)) {
        while (j < lower.size() && IsWordByte(static_cast<unsigned char>(lower[j]))) ++j;
      }
      ids.push_back(Id(std::string_view(lower).substr(i, j - i)));
      i = j;
    }
    return ids;
  }

  std::size_t vocab_size() const override { return vocab_; }

  std::optional<TokenId> TokenToId(std::string_view token) const override {
    if (token == "<pad>") return kStartId;
    if (token == "</s>") return kEosId;
    return Id(utf8::ToLowerAscii(token));
  }

 private:
  TokenId Id(std::string_view word) const {
    return static_cast<TokenId>(kFirstWordId + Fnv1a(word) % (vocab_ - kFirstWordId));
  }

  std::size_t vocab_;
};

struct StubEncoderState : EncoderState {
  std::vector<bool> present;
  std::size_t n = 0;
  std::size_t length() const override { return n; }
};

struct StubPrefixState : DecoderPrefixState {
  std::vector<TokenId> tokens;
  std::size_t length() const override { return tokens.size(); }
};

class StubSession : public Seq2SeqSession {
 public:
  explicit StubSession(const StubOptions& o) : opts_(o) {}

  std::unique_ptr<EncoderState> Encode(std::span<const TokenId> encoder_ids) override {
    if (encoder_ids.empty()) throw BackendError("empty encoder input");
    auto s = std::make_unique<StubEncoderState>();
    s->present.assign(opts_.vocab_size, false);
    for (TokenId id : encoder_ids) s->present.at(static_cast<std::size_t>(id)) = true;
    s->n = encoder_ids.size();
    return s;
  }

  std::unique_ptr<DecoderPrefixState> Prefill(const EncoderState&, std::span<const TokenId> prefix) override {
    auto s = std::make_unique<StubPrefixState>();
    s->tokens.assign(prefix.begin(), prefix.end());
    return s;
  }

  std::vector<LogProbRows> DecodeBatch(const EncoderState& encoder, const DecoderPrefixState&,
                                       std::span<const std::vector<TokenId>> continuations) override {
    const std::size_t call = calls_++;
    if (opts_.fail_on_batch && *opts_.fail_on_batch == call) {
      throw BackendError("stub backend failure injected on batch call " + std::to_string(call));
    }
    const auto* enc = dynamic_cast<const StubEncoderState*>(&encoder);
    if (enc == nullptr) throw BackendError("encoder state belongs to a different backend");
    std::vector<LogProbRows> out;
    out.reserve(continuations.size());
    for (const auto& c : continuations) {
      LogProbRows rows(c.size(), opts_.vocab_size);
      for (std::size_t t = 0; t < c.size(); ++t) FillRow(*enc, c[t], rows.row(t));
      out.push_back(std::move(rows));
    }
    return out;
  }

 private:
  // The distribution depends only on the previous token and the encoder
  // token set, so any batching or prefix split yields identical rows.
  void FillRow(const StubEncoderState& enc, TokenId previous, std::span<float> row) const {
    if (opts_.constant_logprob) {
      std::fill(row.begin(), row.end(), *opts_.constant_logprob);
      return;
    }
    std::vector<double> logits(row.size());
    const std::uint64_t base = SplitMix(opts_.seed ^ (static_cast<std::uint64_t>(previous) << 20));
    double max = -1e300;
    for (std::size_t v = 0; v < row.size(); ++v) {
      const std::uint64_t h = SplitMix(base ^ v);
      double logit = static_cast<double>(h >> 11) * 0x1.0p-53 * 4.0 - 2.0;
      if (enc.present[v]) logit += opts_.copy_bonus;
      logits[v] = logit;
      max = std::max(max, logit);
    }
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - max);
    const double lse = max + std::log(sum);
    for (std::size_t v = 0; v < row.size(); ++v) row[v] = static_cast<float>(logits[v] - lse);
  }

  StubOptions opts_;
  std::size_t calls_ = 0;
};

class StubModel : public Seq2SeqModel {
 public:
  explicit StubModel(const StubOptions& o) : opts_(o), tokenizer_(o.vocab_size) {}

  std::string_view family() const override { return "stub"; }
  const SubwordTokenizer& tokenizer() const override { return tokenizer_; }

  std::vector<TokenId> EncoderInput(std::string_view text, std::size_t max_tokens) const override {
    std::vector<TokenId> ids = tokenizer_.Encode(text);
    const std::size_t keep = max_tokens > 0 ? max_tokens - 1 : 0;
    if (ids.size() > keep) ids.resize(keep);
    ids.push_back(kEosId);
    return ids;
  }

  std::vector<TokenId> DecoderStart() const override { return {kStartId}; }
  TokenId eos_id() const override { return kEosId; }
  std::unique_ptr<Seq2SeqSession> NewSession() const override { return std::make_unique<StubSession>(opts_); }

 private:
  StubOptions opts_;
  StubTokenizer tokenizer_;
};

template <typename T>
T ParseNumber(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InputError("invalid value '" + std::string(value) + "' for stub option " + std::string(key));
  }
  return out;
}

}  // namespace

std::shared_ptr<const Seq2SeqModel> MakeStubModel(const StubOptions& options) {
  if (options.vocab_size < 8) throw InputError("stub vocabulary must have at least 8 entries");
  if (options.constant_logprob && *options.constant_logprob > 0.0f) {
    throw InputError("stub constant log-probability must be <= 0");
  }
  return std::make_shared<const StubModel>(options);
}

StubOptions ParseStubOptions(std::string_view spec) {
  StubOptions o;
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    const std::string_view item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view() : spec.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw InputError("stub option '" + std::string(item) + "' lacks '='");
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    if (key == "seed") {
      o.seed = ParseNumber<std::uint64_t>(key, value);
    } else if (key == "vocab") {
      o.vocab_size = ParseNumber<std::size_t>(key, value);
    } else if (key == "constant") {
      o.constant_logprob = ParseNumber<float>(key, value);
    } else if (key == "bonus") {
      o.copy_bonus = ParseNumber<double>(key, value);
    } else if (key == "fail_on_batch") {
      o.fail_on_batch = ParseNumber<std::size_t>(key, value);
    } else {
      throw InputError("unknown stub option '" + std::string(key) + "'");
    }
  }
  return o;
}

}  // namespace promptrank
