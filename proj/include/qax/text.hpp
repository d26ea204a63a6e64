#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Unicode-aware text utilities shared by every module. All character
// offsets and lengths are counted in Unicode scalar values, never bytes.

namespace qax::text {

// Decodes UTF-8; malformed sequences decode to U+FFFD.
std::u32string to_utf32(std::string_view s);
std::string to_utf8(std::u32string_view s);

// Number of scalar values in a UTF-8 string.
std::size_t char_length(std::string_view s);

// Substring by character offset/length. Throws IndexOutOfRange when the
// range does not fit.
std::string char_substr(std::string_view s, std::size_t char_start,
                        std::size_t char_len);

bool is_space(char32_t c);

// Lowercases letters of the Latin script; everything else is unchanged.
char32_t lower_latin(char32_t c);

// NFC composition, Latin lowercasing, whitespace runs collapsed to one
// space, ends trimmed. Ethiopic and other caseless scripts pass through.
std::string normalize_text(std::string_view s);
std::u32string normalize_utf32(std::string_view s);

struct Word {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_len = 0;
  std::size_t byte_start = 0;
  std::size_t byte_len = 0;

  std::size_t char_end() const { return char_start + char_len; }
  std::size_t byte_end() const { return byte_start + byte_len; }
};

// Whitespace-delimited words of `source`, offsets relative to the raw
// (un-normalized) string.
struct WordSequence {
  std::string source;
  std::vector<Word> words;
  std::size_t source_len = 0;

  std::size_t size() const { return words.size(); }
  bool empty() const { return words.empty(); }
};

WordSequence split_words(std::string_view s);

// Throws IndexOutOfRange unless i < ws.size().
std::size_t word_char_start(const WordSequence& ws, std::size_t i);

// Character-level LCS over already-normalized code points. Two-row DP,
// memory proportional to the shorter input.
std::size_t lcs_length_raw(std::u32string_view a, std::u32string_view b);

// LCS of normalize_text(a) and normalize_text(b), in characters.
std::size_t lcs_length(std::string_view a, std::string_view b);

// lcs / max(len); 1 when both are empty, 0 when exactly one is.
double lcs_similarity_raw(std::u32string_view a, std::u32string_view b);
double lcs_similarity(std::string_view a, std::string_view b);

}  // namespace qax::text
