#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace slangscan::text {

/// NFC normalization, then every run of Unicode whitespace becomes a single
/// ASCII space and leading/trailing whitespace is dropped. Case and
/// punctuation are preserved. Invalid UTF-8 sequences are replaced by U+FFFD.
std::string normalize(std::string_view utf8);

bool is_valid_utf8(std::string_view bytes);

/// ASCII-only lowercase copy.
std::string ascii_lower(std::string_view s);

/// True when the code point ending right before `pos` (or starting at `pos`
/// for word_char_at) is a letter or digit. String edges count as non-word.
bool word_char_before(std::string_view s, std::size_t pos);
bool word_char_at(std::string_view s, std::size_t pos);

/// Decode one code point starting at `pos`. Returns U+FFFD for malformed
/// input and advances `pos` by at least one byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

bool is_word_code_point(char32_t cp);

}  // namespace slangscan::text
