#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 utilities. Everything here works on Unicode scalar values;
// malformed input decodes to U+FFFD one byte at a time.
namespace ptkit::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

// Decodes one scalar starting at `pos`. Returns the number of bytes consumed
// (>= 1 when pos < s.size()); invalid sequences consume one byte and yield U+FFFD.
std::size_t decode_one(std::string_view s, std::size_t pos, char32_t& cp) noexcept;

void append_utf8(std::string& out, char32_t cp);

bool is_valid_utf8(std::string_view s) noexcept;

// Replaces every invalid byte sequence with U+FFFD. Valid input is returned unchanged.
std::string sanitize_utf8(std::string_view s);

std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);

// Unicode White_Space property.
bool is_space(char32_t cp) noexcept;

// Letters and digits. Punctuation, symbols, controls and emoji are not alphanumeric.
bool is_alnum(char32_t cp) noexcept;

// Simple case folding for Latin, Greek and Cyrillic; other scalars pass through.
char32_t to_lower(char32_t cp) noexcept;
std::string to_lower(std::string_view s);

// A word is a maximal run of non-whitespace scalars.
std::vector<std::string_view> split_words(std::string_view s);
std::size_t count_words(std::string_view s) noexcept;

// Collapses whitespace runs to a single ASCII space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Strips leading and trailing non-alphanumeric scalars ("(casa," -> "casa").
std::string_view trim_non_alnum(std::string_view word) noexcept;

}  // namespace ptkit::unicode
