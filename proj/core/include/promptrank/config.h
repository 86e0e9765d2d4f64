#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "promptrank/pipeline.h"

namespace promptrank {

// Flat "key = value" configuration. Blank lines and lines starting with '#'
// are ignored. Every key names exactly one PipelineConfig field:
//
//   alpha gamma template use_position top_k ks encoder_max_tokens
//   batch_size include_eos workers backend weights tagger_weights
//   templates_file position_cap max_candidate_words averaging
//   filter_absent_gold
//
// Booleans accept true/false/1/0; ks is a comma list; averaging is
// micro|macro.
const std::vector<std::string_view>& ConfigKeys();

// Throws InputError on an unknown key or an unparsable value.
void ApplyConfigValue(PipelineConfig& cfg, std::string_view key, std::string_view value);

// Applies every line of `in` on top of `cfg`.
void ApplyConfig(PipelineConfig& cfg, std::istream& in);
void ApplyConfigFile(PipelineConfig& cfg, const std::filesystem::path& path);

// One line per key in ConfigKeys() order; reading it back yields an equal
// configuration.
std::string FormatConfig(const PipelineConfig& cfg);

// "5,10,15" -> {5, 10, 15}. Throws InputError on junk or zero.
std::vector<std::size_t> ParseKs(std::string_view text);

}  // namespace promptrank
