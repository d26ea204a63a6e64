#include "qax/text.hpp"

#include <algorithm>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>

#include "qax/error.hpp"

namespace qax::text {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one scalar value starting at s[i]; advances i.
char32_t decode_one(std::string_view s, std::size_t& i) {
  const auto lead = static_cast<unsigned char>(s[i]);
  if (lead < 0x80) {
    ++i;
    return lead;
  }
  int extra = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1, cp = lead & 0x1F, min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2, cp = lead & 0x0F, min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3, cp = lead & 0x07, min = 0x10000;
  } else {
    ++i;
    return kReplacement;
  }
  if (i + extra >= s.size()) {
    ++i;
    return kReplacement;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto cont = static_cast<unsigned char>(s[i + k]);
    if ((cont & 0xC0) != 0x80) {
      ++i;
      return kReplacement;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return kReplacement;
  }
  i += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
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

bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

std::u32string nfc(std::string_view s) {
  if (is_ascii(s)) return to_utf32(s);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return to_utf32(s);
  const auto src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  const icu::UnicodeString composed = normalizer->normalize(src, status);
  if (U_FAILURE(status)) return to_utf32(s);
  std::string utf8;
  composed.toUTF8String(utf8);
  return to_utf32(utf8);
}

}  // namespace

char32_t lower_latin(char32_t c) {
  if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + ('a' - 'A') : c;
  UErrorCode status = U_ZERO_ERROR;
  if (uscript_getScript(static_cast<UChar32>(c), &status) == USCRIPT_LATIN &&
      U_SUCCESS(status)) {
    return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
  }
  return c;
}

std::u32string to_utf32(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) out.push_back(decode_one(s, i));
  return out;
}

std::string to_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) append_utf8(out, c);
  return out;
}

std::size_t char_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++n) decode_one(s, i);
  return n;
}

std::string char_substr(std::string_view s, std::size_t char_start,
                        std::size_t char_len) {
  std::size_t i = 0;
  std::size_t chars = 0;
  while (chars < char_start && i < s.size()) {
    decode_one(s, i);
    ++chars;
  }
  if (chars < char_start) {
    throw IndexOutOfRange("character offset " + std::to_string(char_start) +
                          " beyond string of length " + std::to_string(chars));
  }
  const std::size_t begin = i;
  std::size_t taken = 0;
  while (taken < char_len && i < s.size()) {
    decode_one(s, i);
    ++taken;
  }
  if (taken < char_len) {
    throw IndexOutOfRange("character range [" + std::to_string(char_start) +
                          ", +" + std::to_string(char_len) +
                          ") overruns string");
  }
  return std::string(s.substr(begin, i - begin));
}

bool is_space(char32_t c) {
  if (c < 0x80) return c == ' ' || (c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x1F);
  return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0;
}

std::u32string normalize_utf32(std::string_view s) {
  const std::u32string composed = nfc(s);
  std::u32string out;
  out.reserve(composed.size());
  bool pending_space = false;
  for (char32_t c : composed) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(lower_latin(c));
  }
  return out;
}

std::string normalize_text(std::string_view s) {
  return to_utf8(normalize_utf32(s));
}

WordSequence split_words(std::string_view s) {
  WordSequence ws;
  ws.source = std::string(s);
  std::size_t i = 0;
  std::size_t chars = 0;
  bool in_word = false;
  Word current;
  while (i < s.size()) {
    const std::size_t byte_at = i;
    const char32_t c = decode_one(s, i);
    if (is_space(c)) {
      if (in_word) {
        current.byte_len = byte_at - current.byte_start;
        current.text = std::string(s.substr(current.byte_start, current.byte_len));
        ws.words.push_back(std::move(current));
        current = Word{};
        in_word = false;
      }
    } else {
      if (!in_word) {
        current.char_start = chars;
        current.byte_start = byte_at;
        current.char_len = 0;
        in_word = true;
      }
      ++current.char_len;
    }
    ++chars;
  }
  if (in_word) {
    current.byte_len = s.size() - current.byte_start;
    current.text = std::string(s.substr(current.byte_start, current.byte_len));
    ws.words.push_back(std::move(current));
  }
  ws.source_len = chars;
  return ws;
}

std::size_t word_char_start(const WordSequence& ws, std::size_t i) {
  if (i >= ws.words.size()) {
    throw IndexOutOfRange("word index " + std::to_string(i) + " of " +
                          std::to_string(ws.words.size()));
  }
  return ws.words[i].char_start;
}

std::size_t lcs_length_raw(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // b is the shorter sequence; rows are indexed by its positions.
  if (b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (char32_t ca : a) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = (ca == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
  return lcs_length_raw(normalize_utf32(a), normalize_utf32(b));
}

double lcs_similarity_raw(std::u32string_view a, std::u32string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  const std::size_t longest = std::max(a.size(), b.size());
  return static_cast<double>(lcs_length_raw(a, b)) / static_cast<double>(longest);
}

double lcs_similarity(std::string_view a, std::string_view b) {
  return lcs_similarity_raw(normalize_utf32(a), normalize_utf32(b));
}

}  // namespace qax::text
