#include <cmath>
#include <fstream>
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

// Learned position tables are offset by two rows in BART checkpoints.
constexpr Eigen::Index kPositionOffset = 2;
constexpr float kLayerNormEps = 1e-5f;

struct BartConfig {
  Eigen::Index d_model = 0;
  Eigen::Index encoder_heads = 0;
  Eigen::Index decoder_heads = 0;
  Eigen::Index encoder_ffn = 0;
  Eigen::Index decoder_ffn = 0;
  int encoder_layers = 0;
  int decoder_layers = 0;
  Eigen::Index max_positions = 0;
  Eigen::Index vocab = 0;
  Activation act = Activation::kGelu;
  float embed_scale = 1.0f;
  TokenId bos = 0;
  TokenId eos = 2;
  TokenId decoder_start = 2;
};

BartConfig ParseConfig(const json& j) {
  if (j.value("normalize_before", false) || j.value("add_final_layer_norm", false)) {
    throw BackendError("pre-norm BART variants are not supported");
  }
  BartConfig c;
  c.d_model = j.at("d_model").get<Eigen::Index>();
  c.encoder_heads = j.at("encoder_attention_heads").get<Eigen::Index>();
  c.decoder_heads = j.at("decoder_attention_heads").get<Eigen::Index>();
  c.encoder_ffn = j.at("encoder_ffn_dim").get<Eigen::Index>();
  c.decoder_ffn = j.at("decoder_ffn_dim").get<Eigen::Index>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.max_positions = j.at("max_position_embeddings").get<Eigen::Index>();
  c.vocab = j.at("vocab_size").get<Eigen::Index>();
  c.act = ParseActivation(j.value("activation_function", std::string("gelu")));
  if (j.value("scale_embedding", false)) c.embed_scale = std::sqrt(static_cast<float>(c.d_model));
  c.bos = j.value("bos_token_id", 0);
  c.eos = j.value("eos_token_id", 2);
  c.decoder_start = j.value("decoder_start_token_id", c.eos);
  return c;
}

struct Attn {
  Linear q, k, v, o;
};

struct Layer {
  Attn self;
  Norm ln_self;
  Attn cross;
  Norm ln_cross;
  Linear fc1, fc2;
  Norm ln_final;
};

class BartModel : public Seq2SeqModel, public std::enable_shared_from_this<BartModel> {
 public:
  BartModel(const std::filesystem::path& dir, const json& config)
      : cfg_(ParseConfig(config)), weights_(SafeTensors::Open(dir / "model.safetensors")) {
    tokenizer_ = LoadTokenizerJson(dir / "tokenizer.json");
    const auto d = cfg_.d_model;
    const std::string root = weights_.Has("model.shared.weight") ? "model." : "";
    shared_ = weights_.Floats(root + "shared.weight", {cfg_.vocab, d});
    lm_head_ = weights_.Has("lm_head.weight") ? weights_.Floats("lm_head.weight", {cfg_.vocab, d}) : shared_;
    if (weights_.Has("final_logits_bias")) logits_bias_ = weights_.Floats("final_logits_bias", {1, cfg_.vocab});

    auto linear = [&](const std::string& name, Eigen::Index out, Eigen::Index in) {
      return Linear{weights_.Floats(name + ".weight", {out, in}), weights_.Floats(name + ".bias", {out}), out, in};
    };
    auto norm = [&](const std::string& name) {
      return Norm{weights_.Floats(name + ".weight", {d}), weights_.Floats(name + ".bias", {d}), d};
    };
    auto attn = [&](const std::string& p) {
      return Attn{linear(p + ".q_proj", d, d), linear(p + ".k_proj", d, d), linear(p + ".v_proj", d, d),
                  linear(p + ".out_proj", d, d)};
    };
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      const std::string p = root + "encoder.layers." + std::to_string(l);
      Layer layer;
      layer.self = attn(p + ".self_attn");
      layer.ln_self = norm(p + ".self_attn_layer_norm");
      layer.fc1 = linear(p + ".fc1", cfg_.encoder_ffn, d);
      layer.fc2 = linear(p + ".fc2", d, cfg_.encoder_ffn);
      layer.ln_final = norm(p + ".final_layer_norm");
      encoder_.push_back(layer);
    }
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      const std::string p = root + "decoder.layers." + std::to_string(l);
      Layer layer;
      layer.self = attn(p + ".self_attn");
      layer.ln_self = norm(p + ".self_attn_layer_norm");
      layer.cross = attn(p + ".encoder_attn");
      layer.ln_cross = norm(p + ".encoder_attn_layer_norm");
      layer.fc1 = linear(p + ".fc1", cfg_.decoder_ffn, d);
      layer.fc2 = linear(p + ".fc2", d, cfg_.decoder_ffn);
      layer.ln_final = norm(p + ".final_layer_norm");
      decoder_.push_back(layer);
    }
    const Eigen::Index pos_rows = cfg_.max_positions + kPositionOffset;
    encoder_pos_ = weights_.Floats(root + "encoder.embed_positions.weight", {pos_rows, d});
    decoder_pos_ = weights_.Floats(root + "decoder.embed_positions.weight", {pos_rows, d});
    encoder_ln_emb_ = norm(root + "encoder.layernorm_embedding");
    decoder_ln_emb_ = norm(root + "decoder.layernorm_embedding");
  }

  std::string_view family() const override { return "bart"; }
  const SubwordTokenizer& tokenizer() const override { return *tokenizer_; }

  std::vector<TokenId> EncoderInput(std::string_view text, std::size_t max_tokens) const override {
    const std::size_t cap = std::max<std::size_t>(2, std::min<std::size_t>(max_tokens, cfg_.max_positions));
    std::vector<TokenId> body = tokenizer_->Encode(text);
    if (body.size() > cap - 2) body.resize(cap - 2);
    std::vector<TokenId> ids;
    ids.reserve(body.size() + 2);
    ids.push_back(cfg_.bos);
    ids.insert(ids.end(), body.begin(), body.end());
    ids.push_back(cfg_.eos);
    return ids;
  }

  std::vector<TokenId> DecoderStart() const override { return {cfg_.decoder_start, cfg_.bos}; }
  TokenId eos_id() const override { return cfg_.eos; }
  std::unique_ptr<Seq2SeqSession> NewSession() const override;

  std::unique_ptr<KvEncoderState> Encode(std::span<const TokenId> ids) const {
    if (ids.empty()) throw BackendError("empty encoder input");
    const auto n = static_cast<Eigen::Index>(ids.size());
    if (n > cfg_.max_positions) throw BackendError("encoder input longer than max_position_embeddings");
    Matrix x = Gather(MatrixMap(shared_, cfg_.vocab, cfg_.d_model), ids) * cfg_.embed_scale;
    x += MatrixMap(encoder_pos_, cfg_.max_positions + kPositionOffset, cfg_.d_model).middleRows(kPositionOffset, n);
    x = LayerNorm(x, encoder_ln_emb_, kLayerNormEps);
    const Eigen::Index hd = cfg_.d_model / cfg_.encoder_heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
    for (const Layer& layer : encoder_) {
      x += layer.self.o(Attention(layer.self.q(x), layer.self.k(x), layer.self.v(x), cfg_.encoder_heads, hd, scale,
                                  nullptr, -1));
      x = LayerNorm(x, layer.ln_self, kLayerNormEps);
      Matrix u = layer.fc1(x);
      ApplyActivation(u, cfg_.act);
      x += layer.fc2(u);
      x = LayerNorm(x, layer.ln_final, kLayerNormEps);
    }
    auto state = std::make_unique<KvEncoderState>();
    state->n = ids.size();
    for (const Layer& layer : decoder_) {
      state->k.push_back(layer.cross.k(x));
      state->v.push_back(layer.cross.v(x));
    }
    return state;
  }

  LogProbRows Decode(const KvEncoderState& enc, const KvPrefixState* past, const RowBlocks& blocks,
                     KvPrefixState* keep) const {
    const Eigen::Index p = past != nullptr ? static_cast<Eigen::Index>(past->n) : 0;
    const auto d = cfg_.d_model;
    const Eigen::Index hd = d / cfg_.decoder_heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
    const MatrixMap pos_table(decoder_pos_, cfg_.max_positions + kPositionOffset, d);

    Matrix x = Gather(MatrixMap(shared_, cfg_.vocab, d), blocks.ids) * cfg_.embed_scale;
    for (std::size_t i = 0; i < blocks.start.size(); ++i) {
      if (p + blocks.length[i] > cfg_.max_positions) {
        throw BackendError("decoder sequence longer than max_position_embeddings");
      }
      x.middleRows(blocks.start[i], blocks.length[i]) += pos_table.middleRows(kPositionOffset + p, blocks.length[i]);
    }
    x = LayerNorm(x, decoder_ln_emb_, kLayerNormEps);

    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      const Layer& layer = decoder_[l];
      const Matrix q = layer.self.q(x);
      const Matrix k = layer.self.k(x);
      const Matrix v = layer.self.v(x);
      Matrix a(x.rows(), d);
      for (std::size_t i = 0; i < blocks.start.size(); ++i) {
        const auto s = blocks.start[i];
        const auto len = blocks.length[i];
        Matrix kk(p + len, d);
        Matrix vv(p + len, d);
        if (p > 0) {
          kk.topRows(p) = past->k[l];
          vv.topRows(p) = past->v[l];
        }
        kk.bottomRows(len) = k.middleRows(s, len);
        vv.bottomRows(len) = v.middleRows(s, len);
        a.middleRows(s, len) = Attention(q.middleRows(s, len), kk, vv, cfg_.decoder_heads, hd, scale, nullptr, p);
      }
      if (keep != nullptr) {
        keep->k.push_back(k);
        keep->v.push_back(v);
      }
      x += layer.self.o(a);
      x = LayerNorm(x, layer.ln_self, kLayerNormEps);
      x += layer.cross.o(Attention(layer.cross.q(x), enc.k[l], enc.v[l], cfg_.decoder_heads, hd, scale, nullptr, -1));
      x = LayerNorm(x, layer.ln_cross, kLayerNormEps);
      Matrix u = layer.fc1(x);
      ApplyActivation(u, cfg_.act);
      x += layer.fc2(u);
      x = LayerNorm(x, layer.ln_final, kLayerNormEps);
    }
    if (keep != nullptr) {
      keep->n = static_cast<std::size_t>(x.rows());
      return {};
    }
    Matrix logits = x * MatrixMap(lm_head_, cfg_.vocab, d).transpose();
    if (logits_bias_ != nullptr) logits.rowwise() += VectorMap(logits_bias_, cfg_.vocab);
    return LogSoftmaxRows(logits);
  }

 private:
  BartConfig cfg_;
  SafeTensors weights_;
  std::unique_ptr<SubwordTokenizer> tokenizer_;
  const float* shared_ = nullptr;
  const float* lm_head_ = nullptr;
  const float* logits_bias_ = nullptr;
  const float* encoder_pos_ = nullptr;
  const float* decoder_pos_ = nullptr;
  Norm encoder_ln_emb_;
  Norm decoder_ln_emb_;
  std::vector<Layer> encoder_;
  std::vector<Layer> decoder_;
};

class BartSession : public Seq2SeqSession {
 public:
  explicit BartSession(std::shared_ptr<const BartModel> model) : model_(std::move(model)) {}

  std::unique_ptr<EncoderState> Encode(std::span<const TokenId> encoder_ids) override {
    return model_->Encode(encoder_ids);
  }

  std::unique_ptr<DecoderPrefixState> Prefill(const EncoderState& encoder, std::span<const TokenId> prefix) override {
    auto state = std::make_unique<KvPrefixState>();
    if (prefix.empty()) return state;
    const std::vector<TokenId> one(prefix.begin(), prefix.end());
    model_->Decode(AsKvEncoder(encoder), nullptr, StackContinuations(std::span(&one, 1)), state.get());
    return state;
  }

  std::vector<LogProbRows> DecodeBatch(const EncoderState& encoder, const DecoderPrefixState& prefix,
                                       std::span<const std::vector<TokenId>> continuations) override {
    const RowBlocks blocks = StackContinuations(continuations);
    if (blocks.ids.empty()) return std::vector<LogProbRows>(continuations.size());
    return SplitRows(model_->Decode(AsKvEncoder(encoder), &AsKvPrefix(prefix), blocks, nullptr), blocks);
  }

 private:
  std::shared_ptr<const BartModel> model_;
};

std::unique_ptr<Seq2SeqSession> BartModel::NewSession() const {
  return std::make_unique<BartSession>(shared_from_this());
}

}  // namespace

std::shared_ptr<const Seq2SeqModel> LoadBart(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw BackendError("cannot open " + (dir / "config.json").string());
  try {
    return std::make_shared<const BartModel>(dir, json::parse(in));
  } catch (const json::exception& e) {
    throw BackendError("malformed BART config in " + dir.string() + ": " + e.what());
  }
}

}  // namespace promptrank::model
