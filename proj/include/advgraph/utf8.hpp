#pragma once

#include <string>
#include <string_view>

namespace advgraph {

// Texts are handled as sequences of Unicode scalar values (char32_t).
// All file formats are UTF-8; these helpers convert at the boundary.

// Decodes UTF-8 into code points. Throws Error on malformed input
// (truncated sequences, overlong encodings, surrogates, > U+10FFFF).
std::u32string utf8_decode(std::string_view s);

std::string utf8_encode(std::u32string_view s);
std::string utf8_encode(char32_t c);

} // namespace advgraph
