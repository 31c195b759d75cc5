// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Minimal UTF-8 word tokenizer. Word characters are ASCII alphanumerics and
// letters above U+00BF outside the punctuation/symbol blocks; case folding covers
// ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic, which is enough for the
// broadcast languages this library targets.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mvtopic/error.hpp"

namespace mvt::text {

namespace detail {

inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto c0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> char32_t {
        if (i + k >= s.size()) return 0xFFFD;
        const auto c = static_cast<unsigned char>(s[i + k]);
        return (c & 0xC0) == 0x80 ? char32_t(c & 0x3F) : char32_t(0xFFFD);
    };
    char32_t cp;
    std::size_t len;
    if (c0 < 0x80) { cp = c0; len = 1; }
    else if ((c0 & 0xE0) == 0xC0) { cp = (char32_t(c0 & 0x1F) << 6) | cont(1); len = 2; }
    else if ((c0 & 0xF0) == 0xE0) { cp = (char32_t(c0 & 0x0F) << 12) | (cont(1) << 6) | cont(2); len = 3; }
    else if ((c0 & 0xF8) == 0xF0) { cp = (char32_t(c0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3); len = 4; }
    else { cp = 0xFFFD; len = 1; }
    i += len;
    return cp;
}

inline void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

}  // namespace detail

inline bool is_word_char(char32_t cp) {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7 || cp == 0xFFFD) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0x1F000) return false;  // emoji and pictographs
    return true;
}

inline char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp >= 0x100 && cp <= 0x17F) {
        if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
        if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    return cp;
}

inline std::string lowercase(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) detail::encode_utf8(to_lower(detail::decode_utf8(s, i)), out);
    return out;
}

/// Number of code points.
inline std::size_t length(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); ++n) detail::decode_utf8(s, i);
    return n;
}

/// A token with its byte span in the source string.
struct Token {
    std::string text;  // lowercased
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Splits at word boundaries and lowercases. No length or stopword filtering.
inline std::vector<Token> tokenize_spans(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t start = i;
        char32_t cp = detail::decode_utf8(s, i);
        if (!is_word_char(cp)) continue;
        Token tok;
        tok.begin = start;
        detail::encode_utf8(to_lower(cp), tok.text);
        std::size_t j = i;
        while (j < s.size()) {
            std::size_t k = j;
            char32_t next = detail::decode_utf8(s, k);
            if (!is_word_char(next)) break;
            detail::encode_utf8(to_lower(next), tok.text);
            j = k;
        }
        tok.end = j;
        i = j;
        out.push_back(std::move(tok));
    }
    return out;
}

/// Lowercased tokens with at least `min_length` code points.
inline std::vector<std::string> tokenize(std::string_view s, std::size_t min_length = 2) {
    std::vector<std::string> out;
    for (auto& t : tokenize_spans(s))
        if (length(t.text) >= min_length) out.push_back(std::move(t.text));
    return out;
}

using StopwordSet = std::unordered_set<std::string>;

/// One word per line; '#' starts a comment. Entries are lowercased.
inline StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open stopword list " + path.string());
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (auto& t : tokenize(line, 1)) out.insert(std::move(t));
    }
    return out;
}

/// Small English/German function-word list used by extractive summarization.
inline const StopwordSet& default_stopwords() {
    static const StopwordSet words = {
        // English
        "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "for", "from", "had", "has", "have", "he",
        "her", "his", "i", "in", "is", "it", "its", "me", "my", "of", "on", "or", "our", "she", "so", "that", "the",
        "their", "them", "there", "these", "they", "this", "those", "to", "was", "we", "were", "what", "which", "who",
        "will", "with", "would", "you", "your", "not", "no", "do", "does", "did", "than", "then", "too", "very",
        "can", "could", "just", "also", "about", "into", "over", "after", "before", "all", "any", "if", "when",
        // German
        "der", "die", "das", "den", "dem", "des", "ein", "eine", "einen", "einem", "einer", "eines", "und", "oder",
        "aber", "ist", "sind", "war", "waren", "wird", "werden", "wurde", "hat", "haben", "hatte", "in", "im", "an",
        "am", "auf", "aus", "bei", "mit", "nach", "von", "vom", "zu", "zum", "zur", "für", "über", "unter", "um",
        "nicht", "auch", "sich", "es", "er", "sie", "wir", "ihr", "ich", "du", "dass", "wie", "als", "so", "noch",
        "nur", "schon", "sehr", "mehr", "heute", "hier", "dort", "da", "was", "wer", "wo", "man", "kein", "keine",
    };
    return words;
}

}  // namespace mvt::text
