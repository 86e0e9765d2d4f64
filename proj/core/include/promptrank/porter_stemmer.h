#pragma once

#include <string>
#include <string_view>

namespace promptrank {

// Porter (1980) suffix stripping, applied as originally published: no
// short-word guard and no later refinements. Input is expected to be a
// lowercase ASCII word; other bytes are treated as consonants.
std::string PorterStem(std::string_view word);

}  // namespace promptrank
