#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "model/models.h"
#include "promptrank/backend.h"
#include "promptrank/errors.h"
#include "promptrank/stub_backend.h"

namespace promptrank {
namespace model {

const KvEncoderState& AsKvEncoder(const EncoderState& s) {
  const auto* kv = dynamic_cast<const KvEncoderState*>(&s);
  if (kv == nullptr) throw BackendError("encoder state belongs to a different backend");
  return *kv;
}

const KvPrefixState& AsKvPrefix(const DecoderPrefixState& s) {
  const auto* kv = dynamic_cast<const KvPrefixState*>(&s);
  if (kv == nullptr) throw BackendError("decoder prefix state belongs to a different backend");
  return *kv;
}

RowBlocks StackContinuations(std::span<const std::vector<TokenId>> continuations) {
  RowBlocks b;
  for (const auto& c : continuations) {
    b.start.push_back(static_cast<Eigen::Index>(b.ids.size()));
    b.length.push_back(static_cast<Eigen::Index>(c.size()));
    b.ids.insert(b.ids.end(), c.begin(), c.end());
  }
  return b;
}

std::vector<LogProbRows> SplitRows(const LogProbRows& all, const RowBlocks& blocks) {
  std::vector<LogProbRows> out;
  out.reserve(blocks.start.size());
  for (std::size_t i = 0; i < blocks.start.size(); ++i) {
    LogProbRows rows(static_cast<std::size_t>(blocks.length[i]), all.cols());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto src = all.row(static_cast<std::size_t>(blocks.start[i]) + r);
      std::copy(src.begin(), src.end(), rows.row(r).begin());
    }
    out.push_back(std::move(rows));
  }
  return out;
}

Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "gelu") return Activation::kGelu;
  if (name == "gelu_new" || name == "gelu_pytorch_tanh") return Activation::kGeluTanh;
  if (name == "silu" || name == "swish") return Activation::kSilu;
  throw BackendError("unsupported activation function: " + name);
}

void ApplyActivation(Matrix& x, Activation act) {
  switch (act) {
    case Activation::kRelu:
      ReluInPlace(x);
      break;
    case Activation::kGelu:
      GeluInPlace(x);
      break;
    case Activation::kGeluTanh:
      GeluTanhInPlace(x);
      break;
    case Activation::kSilu:
      x = x.unaryExpr([](float v) { return v / (1.0f + std::exp(-v)); });
      break;
  }
}

}  // namespace model

LogProbRows Seq2SeqSession::LogSoftmax(std::span<const TokenId> encoder_ids, std::span<const TokenId> decoder_ids) {
  if (encoder_ids.empty() || decoder_ids.empty()) {
    throw std::invalid_argument("LogSoftmax needs non-empty encoder and decoder ids");
  }
  const auto encoder = Encode(encoder_ids);
  const auto prefix = Prefill(*encoder, {});
  const std::vector<std::vector<TokenId>> one{std::vector<TokenId>(decoder_ids.begin(), decoder_ids.end())};
  auto rows = DecodeBatch(*encoder, *prefix, one);
  return std::move(rows.at(0));
}

std::shared_ptr<const Seq2SeqModel> LoadModel(const BackendSpec& spec) {
  const std::string& family = spec.family;
  if (family == "stub" || family.starts_with("stub:")) {
    return MakeStubModel(ParseStubOptions(family.size() > 5 ? std::string_view(family).substr(5) : ""));
  }
  if (family != "t5" && family != "bart" && family != "auto") {
    throw InputError("unknown backend family '" + family + "' (expected t5, bart, auto or stub)");
  }
  if (spec.weights.empty()) throw InputError("backend '" + family + "' needs a weights directory");
  if (!std::filesystem::is_directory(spec.weights)) {
    throw BackendError("weights directory " + spec.weights.string() + " does not exist");
  }
  std::string resolved = family;
  if (family == "auto") {
    std::ifstream in(spec.weights / "config.json");
    if (!in) throw BackendError("cannot open " + (spec.weights / "config.json").string());
    try {
      resolved = nlohmann::json::parse(in).value("model_type", std::string());
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed config.json: ") + e.what());
    }
  }
  if (resolved == "t5") return model::LoadT5(spec.weights);
  if (resolved == "bart") return model::LoadBart(spec.weights);
  throw BackendError("unsupported model_type '" + resolved + "'");
}

}  // namespace promptrank
