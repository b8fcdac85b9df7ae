#include "ptkit/unicode.hpp"

namespace ptkit::unicode {

std::size_t decode_one(std::string_view s, std::size_t pos, char32_t& cp) noexcept {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    }
    std::size_t len = 0;
    char32_t value = 0;
    char32_t min_value = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        value = b0 & 0x1F;
        min_value = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        value = b0 & 0x0F;
        min_value = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        value = b0 & 0x07;
        min_value = 0x10000;
    } else {
        cp = kReplacement;
        return 1;
    }
    if (pos + len > s.size()) {
        cp = kReplacement;
        return 1;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            cp = kReplacement;
            return 1;
        }
        value = (value << 6) | (b & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range values are invalid.
    if (value < min_value || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) {
        cp = kReplacement;
        return 1;
    }
    cp = value;
    return len;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        cp = kReplacement;
    }
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

namespace {

// A decoded U+FFFD that came from real EF BF BD bytes is valid; one produced
// by a 1-byte error consumption is not.
bool step_valid(std::string_view s, std::size_t pos, std::size_t& len) noexcept {
    char32_t cp = 0;
    len = decode_one(s, pos, cp);
    return !(cp == kReplacement && len == 1);
}

}  // namespace

bool is_valid_utf8(std::string_view s) noexcept {
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t len = 0;
        if (!step_valid(s, pos, len)) {
            return false;
        }
        pos += len;
    }
    return true;
}

std::string sanitize_utf8(std::string_view s) {
    if (is_valid_utf8(s)) {
        return std::string(s);
    }
    std::string out;
    out.reserve(s.size() + 8);
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t len = 0;
        if (step_valid(s, pos, len)) {
            out.append(s.substr(pos, len));
        } else {
            append_utf8(out, kReplacement);
        }
        pos += len;
    }
    return out;
}

std::u32string decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        char32_t cp = 0;
        pos += decode_one(s, pos, cp);
        out.push_back(cp);
    }
    return out;
}

std::string encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) {
        append_utf8(out, cp);
    }
    return out;
}

bool is_space(char32_t cp) noexcept {
    if (cp <= 0x20) {
        return cp == 0x20 || (cp >= 0x09 && cp <= 0x0D);
    }
    switch (cp) {
        case 0x85:
        case 0xA0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_alnum(char32_t cp) noexcept {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp < 0xC0) {
        // Latin-1 punctuation and symbols, plus C1 controls. Ordinal indicators count as letters.
        return cp == 0xAA || cp == 0xBA || cp == 0xB5;
    }
    if (cp == 0xD7 || cp == 0xF7) {
        return false;
    }
    // Block-level exclusions: general punctuation through miscellaneous symbols,
    // CJK punctuation, private use, specials, fullwidth ASCII punctuation, emoji.
    if ((cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x3000 && cp <= 0x303F) ||
        (cp >= 0xE000 && cp <= 0xF8FF) || (cp >= 0xFE30 && cp <= 0xFE4F) ||
        (cp >= 0xFFF0 && cp <= 0xFFFF) || (cp >= 0x1F000 && cp <= 0x1FAFF)) {
        return false;
    }
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
        return false;
    }
    // Combining diacritics and spacing modifiers.
    if ((cp >= 0x02B0 && cp <= 0x036F)) {
        return false;
    }
    return !is_space(cp);
}

char32_t to_lower(char32_t cp) noexcept {
    if (cp < 0x80) {
        return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    }
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
        return cp + 32;
    }
    if (cp >= 0x100 && cp <= 0x17F) {
        // Latin Extended-A alternates upper/lower, with an offset range around U+0130..U+0148.
        if (cp == 0x130) {
            return 'i';
        }
        if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) {
            return (cp % 2 == 1) ? cp + 1 : cp;
        }
        if (cp == 0x178) {
            return 0xFF;
        }
        return (cp % 2 == 0 && cp != 0x138 && cp != 0x149) ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) {
        return cp + 32;
    }
    if (cp >= 0x410 && cp <= 0x42F) {
        return cp + 32;
    }
    if (cp >= 0x400 && cp <= 0x40F) {
        return cp + 80;
    }
    return cp;
}

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        char32_t cp = 0;
        const std::size_t len = decode_one(s, pos, cp);
        if (cp < 0x80) {
            out.push_back(static_cast<char>(to_lower(cp)));
        } else {
            append_utf8(out, to_lower(cp));
        }
        pos += len;
    }
    return out;
}

namespace {

template <typename OnWord>
void scan_words(std::string_view s, OnWord&& on_word) {
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;
    while (pos < s.size()) {
        char32_t cp = 0;
        const std::size_t len = decode_one(s, pos, cp);
        if (is_space(cp)) {
            if (start != std::string_view::npos) {
                on_word(s.substr(start, pos - start));
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = pos;
        }
        pos += len;
    }
    if (start != std::string_view::npos) {
        on_word(s.substr(start));
    }
}

}  // namespace

std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> words;
    scan_words(s, [&](std::string_view w) { words.push_back(w); });
    return words;
}

std::size_t count_words(std::string_view s) noexcept {
    std::size_t n = 0;
    scan_words(s, [&](std::string_view) { ++n; });
    return n;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    scan_words(s, [&](std::string_view w) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out.append(w);
    });
    return out;
}

std::string_view trim_non_alnum(std::string_view word) noexcept {
    std::size_t begin = 0;
    while (begin < word.size()) {
        char32_t cp = 0;
        const std::size_t len = decode_one(word, begin, cp);
        if (is_alnum(cp)) {
            break;
        }
        begin += len;
    }
    std::size_t end = begin;
    std::size_t pos = begin;
    while (pos < word.size()) {
        char32_t cp = 0;
        const std::size_t len = decode_one(word, pos, cp);
        pos += len;
        if (is_alnum(cp)) {
            end = pos;
        }
    }
    return word.substr(begin, end - begin);
}

}  // namespace ptkit::unicode
