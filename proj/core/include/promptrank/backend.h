#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptrank {

using TokenId = std::int32_t;

// Dense row-major block of log-probabilities over a vocabulary.
class LogProbRows {
 public:
  LogProbRows() = default;
  LogProbRows(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  float at(std::size_t r, TokenId token) const { return data_[r * cols_ + static_cast<std::size_t>(token)]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

class SubwordTokenizer {
 public:
  virtual ~SubwordTokenizer() = default;
  // Token ids of `text` without any special tokens.
  virtual std::vector<TokenId> Encode(std::string_view text) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::optional<TokenId> TokenToId(std::string_view token) const = 0;
};

// Opaque per-document encoder output (hidden states and the cross-attention
// keys/values derived from them).
class EncoderState {
 public:
  virtual ~EncoderState() = default;
  virtual std::size_t length() const = 0;
};

// Decoder self-attention cache for a token prefix shared by many sequences.
class DecoderPrefixState {
 public:
  virtual ~DecoderPrefixState() = default;
  virtual std::size_t length() const = 0;
};

// One inference session. Sessions hold scratch state and are not shared
// between threads; create one per worker.
class Seq2SeqSession {
 public:
  virtual ~Seq2SeqSession() = default;

  virtual std::unique_ptr<EncoderState> Encode(std::span<const TokenId> encoder_ids) = 0;

  // Runs the decoder over `prefix` (may be empty) once.
  virtual std::unique_ptr<DecoderPrefixState> Prefill(const EncoderState& encoder,
                                                      std::span<const TokenId> prefix) = 0;

  // For every continuation c, returns |c| rows: row t is the log-softmax
  // distribution of the token following prefix + c[0..t].
  virtual std::vector<LogProbRows> DecodeBatch(const EncoderState& encoder, const DecoderPrefixState& prefix,
                                               std::span<const std::vector<TokenId>> continuations) = 0;

  // Uncached form of the contract: log-softmax rows for every position of
  // `decoder_ids` (row t predicts decoder_ids[t + 1]).
  LogProbRows LogSoftmax(std::span<const TokenId> encoder_ids, std::span<const TokenId> decoder_ids);
};

class Seq2SeqModel {
 public:
  virtual ~Seq2SeqModel() = default;

  virtual std::string_view family() const = 0;
  virtual const SubwordTokenizer& tokenizer() const = 0;

  // Tokenized encoder input with the family's special tokens, truncated to
  // at most `max_tokens` ids (the end-of-sequence marker is kept).
  virtual std::vector<TokenId> EncoderInput(std::string_view text, std::size_t max_tokens) const = 0;
  // Ids that open every decoder sequence (T5: <pad>; BART: </s> <s>).
  virtual std::vector<TokenId> DecoderStart() const = 0;
  virtual TokenId eos_id() const = 0;

  virtual std::unique_ptr<Seq2SeqSession> NewSession() const = 0;
};

// `family` is "t5", "bart" or "stub[:opt=value,...]"; `weights` is a
// directory holding config.json, model.safetensors and tokenizer.json.
struct BackendSpec {
  std::string family = "t5";
  std::filesystem::path weights;
};

// Throws BackendError when the model cannot be loaded, InputError for an
// unknown family.
std::shared_ptr<const Seq2SeqModel> LoadModel(const BackendSpec& spec);

}  // namespace promptrank
