#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emotok/emoji_lexicon.hpp"
#include "emotok/segmenter.hpp"

namespace emotok {

struct VocabError : std::runtime_error {
  explicit VocabError(const std::string& what) : std::runtime_error(what) {}
};

constexpr std::string_view kPadToken = "[PAD]";
constexpr std::string_view kUnkToken = "[UNK]";
constexpr std::string_view kClsToken = "[CLS]";
constexpr std::string_view kSepToken = "[SEP]";
constexpr std::string_view kMaskToken = "[MASK]";

using TokenId = std::int32_t;

// Token <-> id bijection. Base WordPiece entries keep their file order; emoji
// alias tokens occupy the appended [base_size, size) id range.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> tokens) {
    for (auto& t : tokens) append(std::move(t));
    base_size_ = id_to_token_.size();
    emoji_begin_ = emoji_end_ = base_size_;
    resolve_specials();
  }

  static Vocabulary from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw VocabError("cannot open vocabulary file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      tokens.push_back(line);
    }
    if (tokens.empty()) throw VocabError("empty vocabulary file: " + path);
    return Vocabulary(std::move(tokens));
  }

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t base_size() const { return base_size_; }
  std::pair<TokenId, TokenId> emoji_range() const {
    return {static_cast<TokenId>(emoji_begin_), static_cast<TokenId>(emoji_end_)};
  }

  const std::string& token(TokenId id) const { return id_to_token_.at(id); }

  TokenId id(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    if (it == token_to_id_.end())
      throw VocabError("token not in vocabulary: " + std::string(token));
    return it->second;
  }

  bool contains(std::string_view token) const {
    return token_to_id_.count(std::string(token)) > 0;
  }

  TokenId pad_id() const { return pad_id_; }
  TokenId unk_id() const { return unk_id_; }
  TokenId cls_id() const { return cls_id_; }
  TokenId sep_id() const { return sep_id_; }
  TokenId mask_id() const { return mask_id_; }

  bool is_special(TokenId id) const {
    return id == pad_id_ || id == unk_id_ || id == cls_id_ || id == sep_id_ ||
           id == mask_id_;
  }

  // Appends one :alias: token per lexicon alias not already present, in
  // lexicon order. Base ids are untouched; re-extending is a no-op.
  friend Vocabulary extend_vocab(const Vocabulary& vocab, const EmojiLexicon& lexicon) {
    Vocabulary out = vocab;
    if (out.emoji_begin_ == out.emoji_end_) out.emoji_begin_ = out.emoji_end_ = out.size();
    for (const auto& e : lexicon.entries()) {
      const std::string tok = ":" + e.alias + ":";
      if (out.contains(tok)) continue;
      out.append(tok);
      out.emoji_end_ = out.size();
    }
    return out;
  }

 private:
  void append(std::string token) {
    const TokenId id = static_cast<TokenId>(id_to_token_.size());
    if (!token_to_id_.emplace(token, id).second)
      throw VocabError("duplicate vocabulary token: " + token);
    id_to_token_.push_back(std::move(token));
  }

  void resolve_specials() {
    auto need = [&](std::string_view t) {
      auto it = token_to_id_.find(std::string(t));
      if (it == token_to_id_.end())
        throw VocabError("vocabulary missing special token " + std::string(t));
      return it->second;
    };
    pad_id_ = need(kPadToken);
    unk_id_ = need(kUnkToken);
    cls_id_ = need(kClsToken);
    sep_id_ = need(kSepToken);
    mask_id_ = need(kMaskToken);
  }

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::size_t base_size_ = 0;
  std::size_t emoji_begin_ = 0;
  std::size_t emoji_end_ = 0;
  TokenId pad_id_ = -1, unk_id_ = -1, cls_id_ = -1, sep_id_ = -1, mask_id_ = -1;
};

inline constexpr std::size_t kDefaultMaxWordChars = 100;

// Greedy longest-match-first WordPiece. Non-initial pieces carry the "##"
// prefix; an unmatchable remainder or an over-long word yields [UNK].
inline std::vector<std::string> wordpiece(std::string_view word, const Vocabulary& vocab,
                                          std::size_t max_word_chars = kDefaultMaxWordChars) {
  const std::vector<Codepoint> cps = utf8::decode(word);
  if (cps.empty()) return {};
  if (cps.size() > max_word_chars) return {std::string(kUnkToken)};

  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < cps.size()) {
    std::size_t end = cps.size();
    std::string match;
    while (end > start) {
      std::string candidate = start > 0 ? "##" : "";
      for (std::size_t i = start; i < end; ++i) utf8::encode_to(cps[i], candidate);
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (match.empty()) return {std::string(kUnkToken)};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

struct TokenizedSequence {
  std::vector<std::string> tokens;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> segment_ids;
  std::vector<std::uint8_t> attention_mask;
  std::vector<bool> maskable;  // false for [CLS]/[SEP]
};

struct EncodeOptions {
  EmojiMode emoji_mode = EmojiMode::Aliased;
  std::size_t max_word_chars = kDefaultMaxWordChars;
};

namespace detail {

// Whitespace split, then single-character splits on ASCII punctuation.
// :alias: chunks present in the vocabulary stay whole.
inline std::vector<std::string> pretokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    const std::string_view chunk = text.substr(pos, end - pos);
    pos = end;

    if (chunk.size() >= 3 && chunk.front() == ':' && chunk.back() == ':' &&
        vocab.contains(chunk)) {
      words.emplace_back(chunk);
      continue;
    }
    std::string current;
    std::size_t cpos = 0;
    while (cpos < chunk.size()) {
      std::size_t next = cpos;
      const Codepoint cp = utf8::decode_one(chunk, next);
      if (cp < 0x80 && is_ascii_punct(static_cast<char>(cp))) {
        if (!current.empty()) {
          words.push_back(std::move(current));
          current.clear();
        }
        words.emplace_back(1, static_cast<char>(cp));
      } else {
        current += chunk.substr(cpos, next - cpos);
      }
      cpos = next;
    }
    if (!current.empty()) words.push_back(std::move(current));
  }
  return words;
}

}  // namespace detail

inline std::vector<std::string> tokenize_text(std::string_view text, const Vocabulary& vocab,
                                              const EmojiLexicon& lexicon,
                                              const EncodeOptions& opts = {}) {
  const std::string norm = normalize(lexicon, text, opts.emoji_mode);
  std::vector<std::string> out;
  for (const auto& word : detail::pretokenize(norm, vocab)) {
    if (word.size() >= 3 && word.front() == ':' && word.back() == ':' &&
        vocab.contains(word)) {
      out.push_back(word);
      continue;
    }
    for (auto& piece : wordpiece(word, vocab, opts.max_word_chars))
      out.push_back(std::move(piece));
  }
  return out;
}

// [CLS] A [SEP] B [SEP] assembly with longest-first tail truncation.
inline TokenizedSequence encode_pair(std::string_view a, std::string_view b,
                                     const Vocabulary& vocab, const EmojiLexicon& lexicon,
                                     std::size_t max_len, const EncodeOptions& opts = {}) {
  if (max_len < 8) throw VocabError("encode_pair: max_len must be at least 8");
  std::vector<std::string> ta = tokenize_text(a, vocab, lexicon, opts);
  std::vector<std::string> tb = tokenize_text(b, vocab, lexicon, opts);

  const std::size_t budget = max_len - 3;  // [CLS] + 2x[SEP]
  while (ta.size() + tb.size() > budget) {
    if (ta.size() >= tb.size() && ta.size() > 1) ta.pop_back();
    else if (tb.size() > 1) tb.pop_back();
    else if (ta.size() > 1) ta.pop_back();
    else throw VocabError("encode_pair: max_len too small for both sentences");
  }

  TokenizedSequence seq;
  const std::size_t total = ta.size() + tb.size() + 3;
  seq.tokens.reserve(total);
  auto push = [&](std::string tok, std::uint8_t segment, bool can_mask) {
    seq.ids.push_back(vocab.contains(tok) ? vocab.id(tok) : vocab.unk_id());
    seq.tokens.push_back(std::move(tok));
    seq.segment_ids.push_back(segment);
    seq.attention_mask.push_back(1);
    seq.maskable.push_back(can_mask);
  };
  push(std::string(kClsToken), 0, false);
  for (auto& t : ta) push(std::move(t), 0, true);
  push(std::string(kSepToken), 0, false);
  for (auto& t : tb) push(std::move(t), 1, true);
  push(std::string(kSepToken), 1, false);
  return seq;
}

}  // namespace emotok
