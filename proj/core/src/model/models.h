#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "model/tensor_ops.h"
#include "promptrank/backend.h"

namespace promptrank::model {

// Cross-attention keys/values of every decoder layer.
struct KvEncoderState : EncoderState {
  std::vector<Matrix> k;
  std::vector<Matrix> v;
  std::size_t n = 0;
  std::size_t length() const override { return n; }
};

// Self-attention keys/values of every decoder layer for a shared prefix.
struct KvPrefixState : DecoderPrefixState {
  std::vector<Matrix> k;
  std::vector<Matrix> v;
  std::size_t n = 0;
  std::size_t length() const override { return n; }
};

const KvEncoderState& AsKvEncoder(const EncoderState& s);
const KvPrefixState& AsKvPrefix(const DecoderPrefixState& s);

// Offsets of each continuation inside the stacked row block.
struct RowBlocks {
  std::vector<TokenId> ids;
  std::vector<Eigen::Index> start;
  std::vector<Eigen::Index> length;
};
RowBlocks StackContinuations(std::span<const std::vector<TokenId>> continuations);
// Splits stacked log-prob rows back into one block per continuation.
std::vector<LogProbRows> SplitRows(const LogProbRows& all, const RowBlocks& blocks);

// T5 relative-position bucket of key position minus query position,
// computed in float32 like the reference implementation.
int T5RelativeBucket(int relative_position, bool bidirectional, int num_buckets, int max_distance);

enum class Activation { kRelu, kGelu, kGeluTanh, kSilu };
Activation ParseActivation(const std::string& name);
void ApplyActivation(Matrix& x, Activation act);

std::shared_ptr<const Seq2SeqModel> LoadT5(const std::filesystem::path& dir);
std::shared_ptr<const Seq2SeqModel> LoadBart(const std::filesystem::path& dir);

}  // namespace promptrank::model
