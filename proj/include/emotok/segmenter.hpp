#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "emotok/emoji_lexicon.hpp"
#include "emotok/utf8.hpp"

namespace emotok {

enum class SpanKind { Text, Emoji, CustomEmoji, Emoticon };

struct Span {
  SpanKind kind = SpanKind::Text;
  std::string raw;             // substring as it appeared
  std::string alias;           // set iff kind is Emoji/CustomEmoji
  std::size_t begin = 0;       // byte offsets into the original text
  std::size_t end = 0;
};

// Patterns checked longest-first at token boundaries.
inline const std::vector<std::string>& default_emoticons() {
  static const std::vector<std::string> kPatterns = {
      ":-)", ":-(", ":-D", ":-P", ";-)", ":'(", "\\o/",
      ":)",  ":(",  ":D",  ":P",  ";)",
  };
  return kPatterns;
}

namespace detail {

inline bool is_emoticon_char(char c) {
  return c == ':' || c == ';' || c == '-' || c == ')' || c == '(' || c == 'D' ||
         c == 'P' || c == '\'' || c == '\\' || c == 'o' || c == '/';
}

inline bool is_ascii_punct(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return (u >= '!' && u <= '/') || (u >= ':' && u <= '@') || (u >= '[' && u <= '`') ||
         (u >= '{' && u <= '~');
}

// Token boundary for emoticons: edge of string, whitespace, or punctuation
// that is not itself an emoticon character.
inline bool emoticon_boundary(std::string_view text, std::size_t pos, bool before) {
  if (before) {
    if (pos == 0) return true;
    const char c = text[pos - 1];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return true;
    return is_ascii_punct(c) && !is_emoticon_char(c);
  }
  if (pos >= text.size()) return true;
  const char c = text[pos];
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return true;
  return is_ascii_punct(c) && !is_emoticon_char(c);
}

// Longest emoticon pattern matching at pos with boundary checks, or 0.
inline std::size_t match_emoticon(std::string_view text, std::size_t pos,
                                  const std::vector<std::string>& patterns) {
  if (!emoticon_boundary(text, pos, /*before=*/true)) return 0;
  std::size_t best = 0;
  for (const auto& pat : patterns) {
    if (pat.size() <= best) continue;
    if (text.substr(pos, pat.size()) != pat) continue;
    if (!emoticon_boundary(text, pos + pat.size(), /*before=*/false)) continue;
    best = pat.size();
  }
  return best;
}

// :alias: textual form at pos; returns total byte length or 0.
inline std::size_t match_alias_form(const EmojiLexicon& lexicon, std::string_view text,
                                    std::size_t pos, const EmojiEntry** out) {
  if (text[pos] != ':') return 0;
  std::size_t close = pos + 1;
  while (close < text.size()) {
    const char c = text[close];
    const bool alias_char = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                            c == '_' || c == '+' || c == '-';
    if (!alias_char) break;
    ++close;
  }
  if (close == pos + 1 || close >= text.size() || text[close] != ':') return 0;
  const EmojiEntry* e = lexicon.find_alias(text.substr(pos + 1, close - pos - 1));
  if (!e) return 0;
  *out = e;
  return close - pos + 1;
}

}  // namespace detail

// Greedy longest-match segmentation: lexicon codepoint sequences first, then
// textual :alias: forms, then emoticons; everything else is text. Spans cover
// the input exactly.
inline std::vector<Span> segment(const EmojiLexicon& lexicon, std::string_view text,
                                 const std::vector<std::string>& emoticons =
                                     default_emoticons()) {
  if (!utf8::is_valid(text)) throw Utf8Error("segment: input is not valid UTF-8");

  std::vector<Span> spans;
  std::size_t pos = 0;
  std::size_t text_start = 0;  // start of the pending text span

  auto flush_text = [&](std::size_t upto) {
    if (upto > text_start) {
      Span s;
      s.kind = SpanKind::Text;
      s.raw = std::string(text.substr(text_start, upto - text_start));
      s.begin = text_start;
      s.end = upto;
      spans.push_back(std::move(s));
    }
  };

  while (pos < text.size()) {
    // 1. longest lexicon codepoint sequence
    const std::size_t first_pos = pos;
    std::size_t probe = pos;
    Codepoint first = utf8::decode_one(text, probe);
    if (lexicon.is_sequence_start(first)) {
      std::vector<Codepoint> seq{first};
      std::size_t scan = probe;
      std::size_t best_len = 0;
      const EmojiEntry* best = nullptr;
      while (true) {
        if (const EmojiEntry* e = lexicon.find_sequence(seq)) {
          best = e;
          best_len = scan - first_pos;
        }
        if (seq.size() >= lexicon.max_sequence_len() || scan >= text.size()) break;
        seq.push_back(utf8::decode_one(text, scan));
      }
      if (best) {
        flush_text(first_pos);
        Span s;
        s.kind = best->source == EmojiSource::Custom ? SpanKind::CustomEmoji
                                                     : SpanKind::Emoji;
        s.raw = std::string(text.substr(first_pos, best_len));
        s.alias = best->alias;
        s.begin = first_pos;
        s.end = first_pos + best_len;
        spans.push_back(std::move(s));
        pos = s.end;
        text_start = pos;
        continue;
      }
    }
    // 2. :alias: textual form
    if (text[pos] == ':') {
      const EmojiEntry* e = nullptr;
      if (std::size_t len = detail::match_alias_form(lexicon, text, pos, &e)) {
        flush_text(pos);
        Span s;
        s.kind = e->source == EmojiSource::Custom ? SpanKind::CustomEmoji
                                                  : SpanKind::Emoji;
        s.raw = std::string(text.substr(pos, len));
        s.alias = e->alias;
        s.begin = pos;
        s.end = pos + len;
        spans.push_back(std::move(s));
        pos += len;
        text_start = pos;
        continue;
      }
    }
    // 3. emoticon
    if (std::size_t len = detail::match_emoticon(text, pos, emoticons)) {
      flush_text(pos);
      Span s;
      s.kind = SpanKind::Emoticon;
      s.raw = std::string(text.substr(pos, len));
      s.begin = pos;
      s.end = pos + len;
      spans.push_back(std::move(s));
      pos += len;
      text_start = pos;
      continue;
    }
    pos = probe;  // plain text scalar
  }
  flush_text(text.size());
  return spans;
}

inline std::vector<Span> detect_emoticons(std::string_view text,
                                          const std::vector<std::string>& emoticons =
                                              default_emoticons()) {
  if (!utf8::is_valid(text)) throw Utf8Error("detect_emoticons: input is not valid UTF-8");
  std::vector<Span> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (std::size_t len = detail::match_emoticon(text, pos, emoticons)) {
      Span s;
      s.kind = SpanKind::Emoticon;
      s.raw = std::string(text.substr(pos, len));
      s.begin = pos;
      s.end = pos + len;
      out.push_back(std::move(s));
      pos += len;
    } else {
      ++pos;
    }
  }
  return out;
}

enum class EmojiMode { Aliased, Stripped };

// Rewrites each emoji span as " :alias: "; pad spaces merge into adjacent
// whitespace so no double spaces are introduced. Text and emoticon spans pass
// through verbatim. Stripped mode deletes emoji spans instead.
inline std::string normalize(const EmojiLexicon& lexicon, std::string_view text,
                             EmojiMode mode = EmojiMode::Aliased,
                             const std::vector<std::string>& emoticons =
                                 default_emoticons()) {
  const std::vector<Span> spans = segment(lexicon, text, emoticons);
  std::string out;
  out.reserve(text.size() + 16);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& s = spans[i];
    if (s.kind == SpanKind::Emoji || s.kind == SpanKind::CustomEmoji) {
      if (mode == EmojiMode::Stripped) {
        // drop the emoji and one adjacent pad space if it would double up
        if (!out.empty() && out.back() == ' ' && i + 1 < spans.size() &&
            !spans[i + 1].raw.empty() && spans[i + 1].raw.front() == ' ') {
          out.pop_back();
        }
        continue;
      }
      const bool need_left = !out.empty() && out.back() != ' ';
      const bool at_end = i + 1 == spans.size();
      const bool next_has_space =
          !at_end && !spans[i + 1].raw.empty() &&
          (spans[i + 1].raw.front() == ' ' || spans[i + 1].raw.front() == '\t');
      if (need_left) out.push_back(' ');
      out.push_back(':');
      out += s.alias;
      out.push_back(':');
      if (!at_end && !next_has_space) out.push_back(' ');
    } else {
      out += s.raw;
    }
  }
  return out;
}

}  // namespace emotok
