#pragma once

// Shared text primitives: ASCII-level case folding, tokenization,
// word-boundary aware matching, and digit-sequence extraction. Matching
// treats any alphanumeric byte, '_' and all bytes >= 0x80 as word
// characters so multi-byte UTF-8 sequences are never split.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace veil {

inline bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

inline bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string casefold(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(ascii_lower(c));
    return out;
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool is_edge_punct(unsigned char c) {
    switch (c) {
        case '.': case ',': case ';': case ':': case '!': case '?':
        case '\'': case '"': case '(': case ')': case '[': case ']':
        case '{': case '}': case '<': case '>': case '`':
            return true;
        default:
            return false;
    }
}

// Strips punctuation from both ends; interior punctuation stays.
inline std::string_view strip_edge_punct(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_edge_punct(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_edge_punct(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Whitespace-separated tokens.
inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

// Lowercased tokens with edge punctuation removed; empties dropped.
inline std::vector<std::string> normalized_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& w : split_words(s)) {
        auto t = strip_edge_punct(w);
        if (!t.empty()) out.push_back(casefold(t));
    }
    return out;
}

// True when `needle` occurs at `pos` in `hay` with word boundaries on both
// sides. A boundary is only required where the needle edge itself is a word
// character, so values like ".com" still anchor correctly.
inline bool matches_at(std::string_view hay, std::size_t pos,
                       std::string_view needle) {
    if (needle.empty() || pos + needle.size() > hay.size()) return false;
    if (hay.compare(pos, needle.size(), needle) != 0) return false;
    if (pos > 0 && is_word_byte(static_cast<unsigned char>(hay[pos - 1])) &&
        is_word_byte(static_cast<unsigned char>(needle.front())))
        return false;
    std::size_t end = pos + needle.size();
    if (end < hay.size() && is_word_byte(static_cast<unsigned char>(hay[end])) &&
        is_word_byte(static_cast<unsigned char>(needle.back())))
        return false;
    return true;
}

// Word-boundary aware substring search; npos when absent.
inline std::size_t find_bounded(std::string_view hay, std::string_view needle,
                                std::size_t from = 0) {
    if (needle.empty()) return std::string_view::npos;
    for (std::size_t pos = from; pos + needle.size() <= hay.size(); ++pos) {
        pos = hay.find(needle, pos);
        if (pos == std::string_view::npos) return std::string_view::npos;
        if (matches_at(hay, pos, needle)) return pos;
    }
    return std::string_view::npos;
}

inline bool contains_bounded(std::string_view hay, std::string_view needle) {
    return find_bounded(hay, needle) != std::string_view::npos;
}

// Case-insensitive variant (ASCII fold of both sides).
inline bool contains_bounded_ci(std::string_view hay, std::string_view needle) {
    return contains_bounded(casefold(hay), casefold(needle));
}

inline std::string digits_of(std::string_view s) {
    std::string out;
    for (char c : s)
        if (is_ascii_digit(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

// Digit sequences a reformatted value could hide behind: the digit
// projection of every maximal run of digits mixed with common number
// separators, plus every maximal pure-digit run.
inline std::vector<std::string> digit_sequences(std::string_view s) {
    std::vector<std::string> out;
    auto is_sep = [](unsigned char c) {
        return c == '-' || c == '.' || c == ' ' || c == '(' || c == ')' ||
               c == '/' || c == '+';
    };
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_ascii_digit(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        // Extend over digits and separators as long as more digits follow.
        std::size_t j = i, last_digit = i;
        while (j < s.size()) {
            unsigned char c = static_cast<unsigned char>(s[j]);
            if (is_ascii_digit(c)) {
                last_digit = j;
                ++j;
            } else if (is_sep(c)) {
                std::size_t k = j;
                while (k < s.size() &&
                       is_sep(static_cast<unsigned char>(s[k])))
                    ++k;
                if (k < s.size() &&
                    is_ascii_digit(static_cast<unsigned char>(s[k])))
                    j = k;
                else
                    break;
            } else {
                break;
            }
        }
        out.push_back(digits_of(s.substr(i, last_digit - i + 1)));
        // Pure-digit sub-runs of the mixed run.
        std::size_t p = i;
        while (p <= last_digit) {
            if (is_ascii_digit(static_cast<unsigned char>(s[p]))) {
                std::size_t q = p;
                while (q <= last_digit &&
                       is_ascii_digit(static_cast<unsigned char>(s[q])))
                    ++q;
                if (p != i || q != last_digit + 1)
                    out.emplace_back(s.substr(p, q - p));
                p = q;
            } else {
                ++p;
            }
        }
        i = last_digit + 1;
    }
    return out;
}

// A sentence boundary is a run of [.!?] followed by whitespace or end of
// text, so dots inside emails, URLs and decimals do not count. Trailing
// unterminated content counts as one more sentence.
inline int count_sentences(std::string_view s) {
    auto is_term = [](char c) { return c == '.' || c == '!' || c == '?'; };
    int n = 0;
    std::size_t i = 0;
    bool content_since_boundary = false;
    while (i < s.size()) {
        if (is_term(s[i])) {
            std::size_t j = i;
            while (j < s.size() && is_term(s[j])) ++j;
            if (j >= s.size() ||
                std::isspace(static_cast<unsigned char>(s[j]))) {
                if (content_since_boundary) ++n;
                content_since_boundary = false;
            }
            i = j;
        } else {
            if (!std::isspace(static_cast<unsigned char>(s[i])))
                content_since_boundary = true;
            ++i;
        }
    }
    if (content_since_boundary) ++n;
    return n;
}

}  // namespace veil
