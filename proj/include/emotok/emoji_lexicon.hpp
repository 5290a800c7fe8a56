#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "emotok/utf8.hpp"

namespace emotok {

struct LexiconError : std::runtime_error {
  explicit LexiconError(const std::string& what) : std::runtime_error(what) {}
};

enum class EmojiStatus { FullyQualified, MinimallyQualified, Unqualified, Component };
enum class EmojiSource { Unicode, Custom };

inline std::string_view to_string(EmojiStatus s) {
  switch (s) {
    case EmojiStatus::FullyQualified: return "fully-qualified";
    case EmojiStatus::MinimallyQualified: return "minimally-qualified";
    case EmojiStatus::Unqualified: return "unqualified";
    case EmojiStatus::Component: return "component";
  }
  return "?";
}

struct EmojiEntry {
  std::vector<Codepoint> codepoints;  // empty for custom entries
  std::string alias;
  EmojiStatus status = EmojiStatus::FullyQualified;
  EmojiSource source = EmojiSource::Unicode;
  // Less-qualified spellings of the same emoji (e.g. without VS16); all
  // resolve to this entry in the sequence index.
  std::vector<std::vector<Codepoint>> variant_sequences;
};

inline bool is_valid_alias(std::string_view alias) {
  if (alias.empty()) return false;
  for (char c : alias) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '+' || c == '-';
    if (!ok) return false;
  }
  return true;
}

// "flag: Belgium" -> "flag_belgium": lowercase, non-alphanumeric runs collapse
// to one underscore, leading/trailing underscores trimmed.
inline std::string alias_from_name(std::string_view name) {
  std::string out;
  bool pending_sep = false;
  for (char c : name) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      if (pending_sep && !out.empty()) out.push_back('_');
      pending_sep = false;
      out.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

// Immutable inventory of emoji sequences and their canonical aliases.
// Unicode entries come from the emoji-test data format; custom entries carry
// no codepoints and only match in :alias: textual form.
class EmojiLexicon {
 public:
  EmojiLexicon() = default;

  static EmojiLexicon from_entries(std::vector<EmojiEntry> entries) {
    EmojiLexicon lex;
    lex.entries_ = std::move(entries);
    lex.rebuild_indexes();
    return lex;
  }

  const std::vector<EmojiEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t max_sequence_len() const { return max_sequence_len_; }

  const EmojiEntry* find_alias(std::string_view alias) const {
    auto it = alias_index_.find(std::string(alias));
    return it == alias_index_.end() ? nullptr : &entries_[it->second];
  }

  const EmojiEntry* find_sequence(const std::vector<Codepoint>& scalars) const {
    auto it = sequence_index_.find(scalars);
    return it == sequence_index_.end() ? nullptr : &entries_[it->second];
  }

  bool is_sequence_start(Codepoint cp) const {
    return sequence_starts_.count(cp) > 0;
  }

  bool contains_codepoint(Codepoint cp) const {
    return all_codepoints_.count(cp) > 0;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries_) {
      nlohmann::json cps = nlohmann::json::array();
      for (Codepoint cp : e.codepoints) cps.push_back(static_cast<std::uint32_t>(cp));
      nlohmann::json variants = nlohmann::json::array();
      for (const auto& vs : e.variant_sequences) {
        nlohmann::json v = nlohmann::json::array();
        for (Codepoint cp : vs) v.push_back(static_cast<std::uint32_t>(cp));
        variants.push_back(std::move(v));
      }
      arr.push_back({{"codepoints", std::move(cps)},
                     {"alias", e.alias},
                     {"status", std::string(to_string(e.status))},
                     {"source", e.source == EmojiSource::Unicode ? "unicode" : "custom"},
                     {"variant_sequences", std::move(variants)}});
    }
    return nlohmann::json{{"entries", std::move(arr)}};
  }

  static EmojiLexicon from_json(const nlohmann::json& doc) {
    std::vector<EmojiEntry> entries;
    for (const auto& je : doc.at("entries")) {
      EmojiEntry e;
      for (const auto& cp : je.at("codepoints"))
        e.codepoints.push_back(static_cast<Codepoint>(cp.get<std::uint32_t>()));
      e.alias = je.at("alias").get<std::string>();
      const std::string st = je.at("status").get<std::string>();
      if (st == "fully-qualified") e.status = EmojiStatus::FullyQualified;
      else if (st == "minimally-qualified") e.status = EmojiStatus::MinimallyQualified;
      else if (st == "unqualified") e.status = EmojiStatus::Unqualified;
      else e.status = EmojiStatus::Component;
      e.source = je.at("source").get<std::string>() == "custom" ? EmojiSource::Custom
                                                                : EmojiSource::Unicode;
      if (je.contains("variant_sequences")) {
        for (const auto& jv : je.at("variant_sequences")) {
          std::vector<Codepoint> vs;
          for (const auto& cp : jv) vs.push_back(static_cast<Codepoint>(cp.get<std::uint32_t>()));
          e.variant_sequences.push_back(std::move(vs));
        }
      }
      entries.push_back(std::move(e));
    }
    return from_entries(std::move(entries));
  }

 private:
  void rebuild_indexes() {
    alias_index_.clear();
    sequence_index_.clear();
    sequence_starts_.clear();
    all_codepoints_.clear();
    max_sequence_len_ = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (!is_valid_alias(e.alias)) throw LexiconError("invalid alias: " + e.alias);
      if (!alias_index_.emplace(e.alias, i).second)
        throw LexiconError("duplicate alias: " + e.alias);
      if (e.source == EmojiSource::Custom) {
        if (!e.codepoints.empty())
          throw LexiconError("custom entry must have no codepoints: " + e.alias);
        continue;
      }
      if (e.codepoints.empty())
        throw LexiconError("unicode entry without codepoints: " + e.alias);
      index_sequence(e.codepoints, i, e.alias);
      for (const auto& vs : e.variant_sequences) index_sequence(vs, i, e.alias);
    }
  }

  void index_sequence(const std::vector<Codepoint>& seq, std::size_t entry_idx,
                      const std::string& alias) {
    if (seq.empty()) throw LexiconError("empty sequence for alias " + alias);
    if (!sequence_index_.emplace(seq, entry_idx).second)
      throw LexiconError("duplicate codepoint sequence for alias " + alias);
    sequence_starts_.insert(seq.front());
    for (Codepoint cp : seq) all_codepoints_.insert(cp);
    max_sequence_len_ = std::max(max_sequence_len_, seq.size());
  }

  struct SeqHash {
    std::size_t operator()(const std::vector<Codepoint>& v) const noexcept {
      std::size_t h = 1469598103934665603ull;
      for (Codepoint cp : v) {
        h ^= static_cast<std::size_t>(cp);
        h *= 1099511628211ull;
      }
      return h;
    }
  };

  std::vector<EmojiEntry> entries_;
  std::unordered_map<std::string, std::size_t> alias_index_;
  std::unordered_map<std::vector<Codepoint>, std::size_t, SeqHash> sequence_index_;
  std::unordered_set<Codepoint> sequence_starts_;
  std::unordered_set<Codepoint> all_codepoints_;
  std::size_t max_sequence_len_ = 0;
};

namespace detail {

inline std::string_view trim_view(std::string_view sv) {
  std::size_t a = sv.find_first_not_of(" \t");
  if (a == std::string_view::npos) return {};
  std::size_t b = sv.find_last_not_of(" \t");
  return sv.substr(a, b - a + 1);
}

}  // namespace detail

// Parses the Unicode emoji-test text format:
//   <codepoints> ; <status> # <glyph> [E<version>] <name>
// Comment and blank lines are skipped. Aliases derive from the name; when two
// distinct names collapse to the same alias the later one gets _2, _3, ... in
// file order. Repeats of an already-seen name (unqualified and
// minimally-qualified spellings) become variant sequences of the first entry.
inline EmojiLexicon load_unicode_lexicon(std::string_view data) {
  if (!utf8::is_valid(data)) throw LexiconError("input is not valid UTF-8");

  std::vector<EmojiEntry> entries;
  std::unordered_map<std::string, int> alias_uses;        // base alias -> uses
  std::unordered_set<std::string> taken_aliases;
  std::unordered_map<std::string, std::size_t> by_name;   // name -> entry index

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < data.size()) {
    std::size_t end = data.find('\n', start);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(start, end - start);
    ++line_no;
    start = end + 1;

    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t ls = line.find_first_not_of(" \t");
    if (ls == std::string_view::npos) continue;
    if (line[ls] == '#') continue;

    const std::size_t semi = line.find(';');
    if (semi == std::string_view::npos) continue;
    const std::size_t hash = line.find('#', semi);
    if (hash == std::string_view::npos) continue;

    const std::string_view cp_field = detail::trim_view(line.substr(ls, semi - ls));
    const std::string_view status_field =
        detail::trim_view(line.substr(semi + 1, hash - semi - 1));
    const std::string_view comment = detail::trim_view(line.substr(hash + 1));
    if (cp_field.empty())
      throw LexiconError("malformed codepoint field on line " + std::to_string(line_no));

    std::vector<Codepoint> cps;
    std::size_t p = 0;
    while (p < cp_field.size()) {
      while (p < cp_field.size() && (cp_field[p] == ' ' || cp_field[p] == '\t')) ++p;
      if (p >= cp_field.size()) break;
      std::size_t q = p;
      while (q < cp_field.size() && cp_field[q] != ' ' && cp_field[q] != '\t') ++q;
      Codepoint cp = 0;
      for (std::size_t k = p; k < q; ++k) {
        const char c = cp_field[k];
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else
          throw LexiconError("malformed codepoint field on line " + std::to_string(line_no));
        cp = (cp << 4) | static_cast<Codepoint>(d);
      }
      if (q == p || cp > 0x10FFFF)
        throw LexiconError("malformed codepoint field on line " + std::to_string(line_no));
      cps.push_back(cp);
      p = q;
    }
    if (cps.empty())
      throw LexiconError("malformed codepoint field on line " + std::to_string(line_no));

    EmojiStatus status;
    if (status_field == "fully-qualified") status = EmojiStatus::FullyQualified;
    else if (status_field == "minimally-qualified") status = EmojiStatus::MinimallyQualified;
    else if (status_field == "unqualified") status = EmojiStatus::Unqualified;
    else if (status_field == "component") status = EmojiStatus::Component;
    else continue;  // unknown status keyword, skippable line

    // comment layout: <glyph> [E<version>] <name>
    std::string name;
    std::size_t sp = comment.find(' ');
    if (sp == std::string_view::npos) {
      name = std::string(comment);
    } else {
      std::string_view rest = detail::trim_view(comment.substr(sp + 1));
      if (rest.size() >= 2 && rest[0] == 'E' && rest[1] >= '0' && rest[1] <= '9') {
        std::size_t sp2 = rest.find(' ');
        rest = sp2 == std::string_view::npos ? std::string_view{}
                                             : detail::trim_view(rest.substr(sp2 + 1));
      }
      name = std::string(rest);
    }
    if (name.empty()) continue;

    auto named = by_name.find(name);
    if (named != by_name.end() && status != EmojiStatus::FullyQualified) {
      // less-qualified spelling of a seen emoji: extra key on the same entry
      entries[named->second].variant_sequences.push_back(std::move(cps));
      continue;
    }

    std::string base = alias_from_name(name);
    if (base.empty()) base = "emoji";
    int& uses = alias_uses[base];
    ++uses;
    std::string alias = uses == 1 ? base : base + "_" + std::to_string(uses);
    while (!taken_aliases.emplace(alias).second) {
      ++uses;
      alias = base + "_" + std::to_string(uses);
    }

    by_name.emplace(name, entries.size());
    EmojiEntry e;
    e.codepoints = std::move(cps);
    e.alias = std::move(alias);
    e.status = status;
    entries.push_back(std::move(e));
  }

  if (entries.empty()) throw LexiconError("no entries");
  return EmojiLexicon::from_entries(std::move(entries));
}

// Persistent add of a custom :alias: entry; the input lexicon is unchanged.
inline EmojiLexicon register_custom(const EmojiLexicon& lexicon, std::string_view alias) {
  if (!is_valid_alias(alias))
    throw LexiconError("invalid custom alias: " + std::string(alias));
  if (lexicon.find_alias(alias))
    throw LexiconError("duplicate alias: " + std::string(alias));
  std::vector<EmojiEntry> entries = lexicon.entries();
  EmojiEntry e;
  e.alias = std::string(alias);
  e.source = EmojiSource::Custom;
  entries.push_back(std::move(e));
  return EmojiLexicon::from_entries(std::move(entries));
}

inline std::optional<EmojiEntry> lookup_sequence(const EmojiLexicon& lexicon,
                                                 const std::vector<Codepoint>& scalars) {
  if (scalars.empty()) throw LexiconError("lookup_sequence: empty scalar list");
  const EmojiEntry* e = lexicon.find_sequence(scalars);
  if (!e) return std::nullopt;
  return *e;
}

}  // namespace emotok
