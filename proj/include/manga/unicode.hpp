#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace manga {

// One decoded character with its byte span in the source string, so callers
// can slice the original bytes back out.
struct DecodedChar {
  char32_t cp = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Permissive UTF-8 decode: each invalid byte becomes one U+FFFD entry, so the
// result always covers the input and decoding never fails.
std::vector<DecodedChar> decode_utf8(const std::string& s);

std::vector<char32_t> code_points(const std::string& s);

bool is_space(char32_t cp);  // ASCII whitespace and the ideographic space

}  // namespace manga
