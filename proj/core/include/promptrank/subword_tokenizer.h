#pragma once

#include <filesystem>
#include <memory>
#include <string_view>

#include "promptrank/backend.h"

namespace promptrank {

// Loads a HuggingFace `tokenizers` tokenizer.json with a Unigram or BPE
// model. Supported components: normalizers Sequence, Strip, Replace,
// Precompiled, Lowercase, Prepend; pre-tokenizers Sequence, WhitespaceSplit,
// Metaspace, ByteLevel. Post-processors are ignored: special
// tokens are added by the model family. Throws BackendError otherwise.
std::unique_ptr<SubwordTokenizer> LoadTokenizerJson(const std::filesystem::path& path);
std::unique_ptr<SubwordTokenizer> ParseTokenizerJson(std::string_view json_text);

}  // namespace promptrank
