#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace promptrank::utf8 {

// Length in bytes of the code point starting with lead byte `c`. Invalid lead
// bytes count as a single byte so that iteration always makes progress.
std::size_t SequenceLength(unsigned char c);

// Decodes the code point at `pos`, advancing `pos` past it. Malformed bytes
// decode as themselves.
char32_t Decode(std::string_view s, std::size_t& pos);

void Append(std::string& out, char32_t cp);

// First / last `n` code points of `s`.
std::string_view Prefix(std::string_view s, std::size_t n);
std::string_view Suffix(std::string_view s, std::size_t n);

bool IsSpace(char32_t cp);

// ASCII-only case folding; other bytes pass through unchanged.
std::string ToLowerAscii(std::string_view s);

}  // namespace promptrank::utf8
