#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "promptrank/backend.h"

namespace promptrank {

// Deterministic stand-in for an encoder-decoder model.
//
// Tokens are lowercase words / punctuation hashed into a small vocabulary.
// In the default mode each decoder row is a proper log-softmax whose logits
// are a seeded hash of (previous token, vocabulary entry) plus a bonus for
// tokens that occur in the encoder input, so candidates mentioned often in
// the document score higher. With `constant_logprob` set, every entry of
// every row equals that value instead.
struct StubOptions {
  std::uint64_t seed = 0;
  std::size_t vocab_size = 4096;
  std::optional<float> constant_logprob;
  double copy_bonus = 2.0;
  // Makes DecodeBatch throw on the n-th call of a session (0-based).
  std::optional<std::size_t> fail_on_batch;
};

std::shared_ptr<const Seq2SeqModel> MakeStubModel(const StubOptions& options = {});

// Parses the option part of "stub:seed=3,constant=-1,vocab=512,bonus=2".
StubOptions ParseStubOptions(std::string_view spec);

}  // namespace promptrank
