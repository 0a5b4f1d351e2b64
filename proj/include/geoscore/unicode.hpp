#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 handling for the text tokenizer. Case mapping covers Latin,
// Greek and Cyrillic; punctuation covers the ASCII, Latin-1, General
// Punctuation, CJK and fullwidth blocks.
namespace geoscore::unicode {

// Invalid sequences decode to U+FFFD one byte at a time.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view text);

bool is_whitespace(char32_t c);
bool is_punctuation(char32_t c);
char32_t to_lower(char32_t c);

}  // namespace geoscore::unicode
