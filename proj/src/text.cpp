#include "slangscan/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/bytestream.h>
#include <unicode/stringpiece.h>

#include "slangscan/error.hpp"
#include "slangscan/kernels.hpp"

namespace slangscan::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

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

bool is_space(char32_t cp) {
  if (cp < 0x80) return cp == ' ' || (cp >= 0x09 && cp <= 0x0D);
  return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

std::string repair_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) append_utf8(out, decode_utf8(s, pos));
  return out;
}

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  std::string out;
  out.reserve(s.size());
  icu::StringByteSink<std::string> sink(&out);
  norm->normalizeUTF8(0, icu::StringPiece(s.data(), static_cast<int32_t>(s.size())), sink,
                      nullptr, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  return out;
}

}  // namespace

char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  unsigned char b0 = byte(pos);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + static_cast<std::size_t>(len) > s.size()) {
    ++pos;
    return kReplacement;
  }
  for (int i = 1; i < len; ++i) {
    unsigned char b = byte(pos + static_cast<std::size_t>(i));
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kReplacement;
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

bool is_valid_utf8(std::string_view bytes) {
  std::size_t pos = kernels::ascii_prefix_length(bytes);
  while (pos < bytes.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(bytes, pos);
    if (cp == kReplacement) {
      // A literal U+FFFD is three bytes; a decode failure advances by one.
      if (pos - start != 3) return false;
    }
  }
  return true;
}

std::string normalize(std::string_view utf8) {
  std::string canonical;
  const std::size_t ascii = kernels::ascii_prefix_length(utf8);
  if (ascii == utf8.size()) {
    canonical.assign(utf8);
  } else if (is_valid_utf8(utf8)) {
    canonical = nfc(utf8);
  } else {
    canonical = nfc(repair_utf8(utf8));
  }

  std::string out;
  out.reserve(canonical.size());
  bool pending_space = false;
  for (std::size_t pos = 0; pos < canonical.size();) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(canonical, pos);
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(canonical, start, pos - start);
  }
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s.size(), '\0');
  kernels::ascii_fold_lower(s, out);
  return out;
}

bool is_word_code_point(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  return u_isalnum(static_cast<UChar32>(cp)) != 0;
}

bool word_char_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return false;
  return is_word_code_point(decode_utf8(s, pos));
}

bool word_char_before(std::string_view s, std::size_t pos) {
  if (pos == 0 || pos > s.size()) return false;
  std::size_t start = pos - 1;
  while (start > 0 && pos - start < 4 &&
         (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) {
    --start;
  }
  std::size_t cursor = start;
  char32_t cp = decode_utf8(s, cursor);
  if (cursor != pos) cp = kReplacement;
  return is_word_code_point(cp);
}

}  // namespace slangscan::text
