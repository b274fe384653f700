#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dbpa {

// Tokenization for text-space similarity metrics: lowercase (ASCII), split
// on Unicode whitespace, strip leading/trailing ASCII punctuation.

namespace detail {

inline bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x0085: case 0x00A0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline bool is_ascii_punct(char32_t cp) {
    return cp < 128 && std::ispunct(static_cast<int>(cp));
}

// Minimal UTF-8 decode; invalid bytes are passed through as single code
// points so that malformed input still tokenizes deterministically.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) { ++i; return c; }
    int len = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) { len = 2; cp = c & 0x1F; }
    else if ((c & 0xF0) == 0xE0) { len = 3; cp = c & 0x0F; }
    else if ((c & 0xF8) == 0xF0) { len = 4; cp = c & 0x07; }
    else { ++i; return c; }
    if (i + len > s.size()) { ++i; return c; }
    for (int j = 1; j < len; ++j) {
        const unsigned char cc = static_cast<unsigned char>(s[i + j]);
        if ((cc & 0xC0) != 0x80) { ++i; return c; }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += len;
    return cp;
}

} // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    auto flush = [&] {
        // strip leading/trailing ASCII punctuation
        std::size_t b = 0, e = current.size();
        while (b < e && detail::is_ascii_punct(static_cast<unsigned char>(current[b]))) ++b;
        while (e > b && detail::is_ascii_punct(static_cast<unsigned char>(current[e - 1]))) --e;
        if (e > b) tokens.push_back(current.substr(b, e - b));
        current.clear();
    };
    while (i < text.size()) {
        const std::size_t start = i;
        const char32_t cp = detail::decode_utf8(text, i);
        if (detail::is_unicode_space(cp)) {
            flush();
        } else if (cp < 128) {
            current += static_cast<char>(std::tolower(static_cast<int>(cp)));
        } else {
            current.append(text.substr(start, i - start));
        }
    }
    flush();
    return tokens;
}

} // namespace dbpa
