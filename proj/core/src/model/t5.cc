#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "model/models.h"
#include "model/safetensors.h"
#include "promptrank/errors.h"
#include "promptrank/subword_tokenizer.h"

namespace promptrank::model {
namespace {

using nlohmann::json;

struct T5Config {
  Eigen::Index d_model = 0;
  Eigen::Index d_kv = 0;
  Eigen::Index d_ff = 0;
  Eigen::Index heads = 0;
  int encoder_layers = 0;
  int decoder_layers = 0;
  int num_buckets = 32;
  int max_distance = 128;
  float eps = 1e-6f;
  bool gated = false;
  Activation act = Activation::kRelu;
  Eigen::Index vocab = 0;
  bool scale_outputs = true;
  TokenId decoder_start = 0;
  TokenId eos = 1;
};

T5Config ParseConfig(const json& j) {
  T5Config c;
  c.d_model = j.at("d_model").get<Eigen::Index>();
  c.d_kv = j.at("d_kv").get<Eigen::Index>();
  c.d_ff = j.at("d_ff").get<Eigen::Index>();
  c.heads = j.at("num_heads").get<Eigen::Index>();
  c.encoder_layers = j.at("num_layers").get<int>();
  c.decoder_layers = j.value("num_decoder_layers", c.encoder_layers);
  c.num_buckets = j.value("relative_attention_num_buckets", 32);
  c.max_distance = j.value("relative_attention_max_distance", 128);
  c.eps = j.value("layer_norm_epsilon", 1e-6f);
  c.vocab = j.at("vocab_size").get<Eigen::Index>();
  const std::string proj = j.value("feed_forward_proj", std::string("relu"));
  c.gated = proj.starts_with("gated-");
  std::string act = c.gated ? proj.substr(6) : proj;
  if (act == "gelu") act = "gelu_new";  // "gated-gelu" checkpoints use the tanh form
  c.act = ParseActivation(j.value("dense_act_fn", act));
  const bool tied = j.value("tie_word_embeddings", true);
  c.scale_outputs = j.value("scale_decoder_outputs", tied);
  c.decoder_start = j.value("decoder_start_token_id", 0);
  c.eos = j.value("eos_token_id", 1);
  return c;
}

struct Attn {
  Linear q, k, v, o;
};

struct Block {
  Norm ln_self;
  Attn self;
  Norm ln_cross;
  Attn cross;
  Norm ln_ff;
  Linear wi, wi1, wo;
};

class T5Session;

class T5Model : public Seq2SeqModel, public std::enable_shared_from_this<T5Model> {
 public:
  T5Model(const std::filesystem::path& dir, const json& config)
      : cfg_(ParseConfig(config)), weights_(SafeTensors::Open(dir / "model.safetensors")) {
    tokenizer_ = LoadTokenizerJson(dir / "tokenizer.json");
    const auto d = cfg_.d_model;
    const auto inner = cfg_.heads * cfg_.d_kv;
    shared_ = weights_.Floats(weights_.Has("shared.weight") ? "shared.weight" : "encoder.embed_tokens.weight",
                              {cfg_.vocab, d});
    lm_head_ = weights_.Has("lm_head.weight") ? weights_.Floats("lm_head.weight", {cfg_.vocab, d}) : shared_;

    auto linear = [&](const std::string& name, Eigen::Index out, Eigen::Index in) {
      return Linear{weights_.Floats(name, {out, in}), nullptr, out, in};
    };
    auto norm = [&](const std::string& name) { return Norm{weights_.Floats(name, {d}), nullptr, d}; };
    auto attn = [&](const std::string& p) {
      return Attn{linear(p + ".q.weight", inner, d), linear(p + ".k.weight", inner, d),
                  linear(p + ".v.weight", inner, d), linear(p + ".o.weight", d, inner)};
    };
    auto ffn = [&](Block& b, const std::string& p) {
      if (cfg_.gated) {
        b.wi = linear(p + ".DenseReluDense.wi_0.weight", cfg_.d_ff, d);
        b.wi1 = linear(p + ".DenseReluDense.wi_1.weight", cfg_.d_ff, d);
      } else {
        b.wi = linear(p + ".DenseReluDense.wi.weight", cfg_.d_ff, d);
      }
      b.wo = linear(p + ".DenseReluDense.wo.weight", d, cfg_.d_ff);
      b.ln_ff = norm(p + ".layer_norm.weight");
    };

    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      const std::string p = "encoder.block." + std::to_string(l);
      Block b;
      b.ln_self = norm(p + ".layer.0.layer_norm.weight");
      b.self = attn(p + ".layer.0.SelfAttention");
      ffn(b, p + ".layer.1");
      encoder_.push_back(b);
    }
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      const std::string p = "decoder.block." + std::to_string(l);
      Block b;
      b.ln_self = norm(p + ".layer.0.layer_norm.weight");
      b.self = attn(p + ".layer.0.SelfAttention");
      b.ln_cross = norm(p + ".layer.1.layer_norm.weight");
      b.cross = attn(p + ".layer.1.EncDecAttention");
      ffn(b, p + ".layer.2");
      decoder_.push_back(b);
    }
    encoder_final_ = norm("encoder.final_layer_norm.weight");
    decoder_final_ = norm("decoder.final_layer_norm.weight");
    encoder_rel_ = weights_.Floats("encoder.block.0.layer.0.SelfAttention.relative_attention_bias.weight",
                                   {cfg_.num_buckets, cfg_.heads});
    decoder_rel_ = weights_.Floats("decoder.block.0.layer.0.SelfAttention.relative_attention_bias.weight",
                                   {cfg_.num_buckets, cfg_.heads});
  }

  std::string_view family() const override { return "t5"; }
  const SubwordTokenizer& tokenizer() const override { return *tokenizer_; }

  std::vector<TokenId> EncoderInput(std::string_view text, std::size_t max_tokens) const override {
    std::vector<TokenId> ids = tokenizer_->Encode(text);
    const std::size_t keep = max_tokens > 0 ? max_tokens - 1 : 0;
    if (ids.size() > keep) ids.resize(keep);
    ids.push_back(cfg_.eos);
    return ids;
  }

  std::vector<TokenId> DecoderStart() const override { return {cfg_.decoder_start}; }
  TokenId eos_id() const override { return cfg_.eos; }
  std::unique_ptr<Seq2SeqSession> NewSession() const override;

  std::unique_ptr<KvEncoderState> Encode(std::span<const TokenId> ids) const {
    if (ids.empty()) throw BackendError("empty encoder input");
    const auto n = static_cast<Eigen::Index>(ids.size());
    Matrix x = Gather(MatrixMap(shared_, cfg_.vocab, cfg_.d_model), ids);
    const std::vector<Matrix> bias = RelativeBias(encoder_rel_, true, 0, n, n);
    for (const Block& b : encoder_) {
      Matrix h = RmsNorm(x, b.ln_self, cfg_.eps);
      const Matrix a = Attention(b.self.q(h), b.self.k(h), b.self.v(h), cfg_.heads, cfg_.d_kv, 1.0f, &bias, -1);
      x += b.self.o(a);
      x += FeedForward(b, RmsNorm(x, b.ln_ff, cfg_.eps));
    }
    RmsNormInPlace(x, encoder_final_, cfg_.eps);

    auto state = std::make_unique<KvEncoderState>();
    state->n = ids.size();
    for (const Block& b : decoder_) {
      state->k.push_back(b.cross.k(x));
      state->v.push_back(b.cross.v(x));
    }
    return state;
  }

  // Runs the decoder over stacked continuation rows that all follow `past`.
  // With `keep` set, the new self-attention keys/values (of a single block)
  // are stored there instead of computing logits.
  LogProbRows Decode(const KvEncoderState& enc, const KvPrefixState* past, const RowBlocks& blocks,
                     KvPrefixState* keep) const {
    const Eigen::Index p = past != nullptr ? static_cast<Eigen::Index>(past->n) : 0;
    const auto inner = cfg_.heads * cfg_.d_kv;
    Matrix x = Gather(MatrixMap(shared_, cfg_.vocab, cfg_.d_model), blocks.ids);

    std::map<Eigen::Index, std::vector<Matrix>> bias_by_len;
    for (auto len : blocks.length) {
      if (!bias_by_len.contains(len)) bias_by_len.emplace(len, RelativeBias(decoder_rel_, false, p, len, p + len));
    }

    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      const Block& b = decoder_[l];
      Matrix h = RmsNorm(x, b.ln_self, cfg_.eps);
      const Matrix q = b.self.q(h);
      const Matrix k = b.self.k(h);
      const Matrix v = b.self.v(h);
      Matrix a(x.rows(), inner);
      for (std::size_t i = 0; i < blocks.start.size(); ++i) {
        const auto s = blocks.start[i];
        const auto len = blocks.length[i];
        Matrix kk(p + len, inner);
        Matrix vv(p + len, inner);
        if (p > 0) {
          kk.topRows(p) = past->k[l];
          vv.topRows(p) = past->v[l];
        }
        kk.bottomRows(len) = k.middleRows(s, len);
        vv.bottomRows(len) = v.middleRows(s, len);
        a.middleRows(s, len) =
            Attention(q.middleRows(s, len), kk, vv, cfg_.heads, cfg_.d_kv, 1.0f, &bias_by_len.at(len), p);
      }
      if (keep != nullptr) {
        keep->k.push_back(k);
        keep->v.push_back(v);
      }
      x += b.self.o(a);
      h = RmsNorm(x, b.ln_cross, cfg_.eps);
      x += b.cross.o(Attention(b.cross.q(h), enc.k[l], enc.v[l], cfg_.heads, cfg_.d_kv, 1.0f, nullptr, -1));
      x += FeedForward(b, RmsNorm(x, b.ln_ff, cfg_.eps));
    }
    if (keep != nullptr) {
      keep->n = static_cast<std::size_t>(x.rows());
      return {};
    }
    RmsNormInPlace(x, decoder_final_, cfg_.eps);
    if (cfg_.scale_outputs) x *= 1.0f / std::sqrt(static_cast<float>(cfg_.d_model));
    const Matrix logits = x * MatrixMap(lm_head_, cfg_.vocab, cfg_.d_model).transpose();
    return LogSoftmaxRows(logits);
  }

 private:
  Matrix FeedForward(const Block& b, const Matrix& h) const {
    Matrix u = b.wi(h);
    ApplyActivation(u, cfg_.act);
    if (cfg_.gated) u.array() *= b.wi1(h).array();
    return b.wo(u);
  }

  // Per-head [nq, nk] bias for queries at positions q0.. and keys at 0..nk-1.
  std::vector<Matrix> RelativeBias(const float* table, bool bidirectional, Eigen::Index q0, Eigen::Index nq,
                                   Eigen::Index nk) const {
    const MatrixMap t(table, cfg_.num_buckets, cfg_.heads);
    std::vector<Matrix> out(static_cast<std::size_t>(cfg_.heads), Matrix(nq, nk));
    std::map<Eigen::Index, int> bucket_of;
    for (Eigen::Index i = 0; i < nq; ++i) {
      for (Eigen::Index j = 0; j < nk; ++j) {
        const Eigen::Index rel = j - (q0 + i);
        auto it = bucket_of.find(rel);
        if (it == bucket_of.end()) {
          it = bucket_of
                   .emplace(rel, T5RelativeBucket(static_cast<int>(rel), bidirectional, cfg_.num_buckets,
                                                  cfg_.max_distance))
                   .first;
        }
        for (Eigen::Index h = 0; h < cfg_.heads; ++h) out[static_cast<std::size_t>(h)](i, j) = t(it->second, h);
      }
    }
    return out;
  }

  T5Config cfg_;
  SafeTensors weights_;
  std::unique_ptr<SubwordTokenizer> tokenizer_;
  const float* shared_ = nullptr;
  const float* lm_head_ = nullptr;
  const float* encoder_rel_ = nullptr;
  const float* decoder_rel_ = nullptr;
  std::vector<Block> encoder_;
  std::vector<Block> decoder_;
  Norm encoder_final_;
  Norm decoder_final_;
};

class T5Session : public Seq2SeqSession {
 public:
  explicit T5Session(std::shared_ptr<const T5Model> model) : model_(std::move(model)) {}

  std::unique_ptr<EncoderState> Encode(std::span<const TokenId> encoder_ids) override {
    return model_->Encode(encoder_ids);
  }

  std::unique_ptr<DecoderPrefixState> Prefill(const EncoderState& encoder, std::span<const TokenId> prefix) override {
    auto state = std::make_unique<KvPrefixState>();
    if (prefix.empty()) return state;
    const std::vector<TokenId> one(prefix.begin(), prefix.end());
    const RowBlocks blocks = StackContinuations(std::span(&one, 1));
    model_->Decode(AsKvEncoder(encoder), nullptr, blocks, state.get());
    return state;
  }

  std::vector<LogProbRows> DecodeBatch(const EncoderState& encoder, const DecoderPrefixState& prefix,
                                       std::span<const std::vector<TokenId>> continuations) override {
    const RowBlocks blocks = StackContinuations(continuations);
    if (blocks.ids.empty()) return std::vector<LogProbRows>(continuations.size());
    const KvPrefixState& past = AsKvPrefix(prefix);
    return SplitRows(model_->Decode(AsKvEncoder(encoder), &past, blocks, nullptr), blocks);
  }

 private:
  std::shared_ptr<const T5Model> model_;
};

std::unique_ptr<Seq2SeqSession> T5Model::NewSession() const {
  return std::make_unique<T5Session>(shared_from_this());
}

}  // namespace

int T5RelativeBucket(int relative_position, bool bidirectional, int num_buckets, int max_distance) {
  int bucket = 0;
  int n = num_buckets;
  int rel = relative_position;
  if (bidirectional) {
    n /= 2;
    if (rel > 0) bucket += n;
    rel = std::abs(rel);
  } else {
    rel = -std::min(rel, 0);
  }
  const int max_exact = n / 2;
  if (rel < max_exact) return bucket + rel;
  float scaled = std::log(static_cast<float>(rel) / static_cast<float>(max_exact));
  scaled /= static_cast<float>(std::log(static_cast<double>(max_distance) / max_exact));
  scaled *= static_cast<float>(n - max_exact);
  const int large = max_exact + static_cast<int>(scaled);
  return bucket + std::min(large, n - 1);
}

std::shared_ptr<const Seq2SeqModel> LoadT5(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw BackendError("cannot open " + (dir / "config.json").string());
  try {
    return std::make_shared<const T5Model>(dir, json::parse(in));
  } catch (const json::exception& e) {
    throw BackendError("malformed T5 config in " + dir.string() + ": " + e.what());
  }
}

}  // namespace promptrank::model
