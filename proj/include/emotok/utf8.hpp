#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emotok {

using Codepoint = char32_t;

struct Utf8Error : std::runtime_error {
  explicit Utf8Error(const std::string& what) : std::runtime_error(what) {}
};

namespace utf8 {

// Decodes one scalar starting at byte offset `pos`. Advances `pos` past it.
// Rejects overlong encodings, surrogates and truncated sequences.
inline Codepoint decode_one(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) -> std::uint8_t {
    return static_cast<std::uint8_t>(s[i]);
  };
  if (pos >= s.size()) throw Utf8Error("decode past end of input");
  const std::uint8_t b0 = byte(pos);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  Codepoint cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    throw Utf8Error("invalid UTF-8 lead byte at offset " + std::to_string(pos));
  }
  if (pos + len > s.size())
    throw Utf8Error("truncated UTF-8 sequence at offset " + std::to_string(pos));
  for (int i = 1; i < len; ++i) {
    const std::uint8_t b = byte(pos + i);
    if ((b & 0xC0) != 0x80)
      throw Utf8Error("invalid UTF-8 continuation byte at offset " +
                      std::to_string(pos + i));
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr Codepoint kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len]) throw Utf8Error("overlong UTF-8 encoding");
  if (cp >= 0xD800 && cp <= 0xDFFF) throw Utf8Error("surrogate codepoint");
  if (cp > 0x10FFFF) throw Utf8Error("codepoint out of range");
  pos += len;
  return cp;
}

inline std::vector<Codepoint> decode(std::string_view s) {
  std::vector<Codepoint> out;
  std::size_t pos = 0;
  while (pos < s.size()) out.push_back(decode_one(s, pos));
  return out;
}

inline bool is_valid(std::string_view s) noexcept {
  try {
    std::size_t pos = 0;
    while (pos < s.size()) decode_one(s, pos);
    return true;
  } catch (const Utf8Error&) {
    return false;
  }
}

inline void encode_to(Codepoint cp, std::string& out) {
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

inline std::string encode(const std::vector<Codepoint>& cps) {
  std::string out;
  for (Codepoint cp : cps) encode_to(cp, out);
  return out;
}

inline std::string encode(Codepoint cp) {
  std::string out;
  encode_to(cp, out);
  return out;
}

}  // namespace utf8
}  // namespace emotok
