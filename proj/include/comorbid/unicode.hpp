#pragma once

#include <string>
#include <string_view>

namespace comorbid::unicode {

/// Decodes UTF-8. Invalid sequences become U+FFFD, one per offending byte.
std::u32string decode(std::string_view utf8);

std::string encode(std::u32string_view text);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t length(std::string_view utf8);

bool is_valid(std::string_view utf8);

bool is_space(char32_t c);
/// Letters, digits and combining marks: characters that belong inside words.
bool is_word(char32_t c);
/// Everything that is neither whitespace nor a word character.
inline bool is_punct(char32_t c) { return !is_space(c) && !is_word(c); }

}  // namespace comorbid::unicode
