#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emotok/segmenter.hpp"

namespace emotok {

// Utterance-level emoji/emoticon profile of a corpus. An utterance with three
// emoji bumps the utterance flag once and the per-emoji counts three times.
struct CorpusReport {
  std::size_t utterance_count = 0;
  std::size_t emoji_utterances = 0;
  std::size_t emoticon_utterances = 0;
  std::size_t malformed_lines = 0;
  std::map<std::string, std::size_t> emoji_counts;     // alias -> occurrences
  std::map<std::string, std::size_t> emoticon_counts;  // pattern -> occurrences

  double emoji_utterance_fraction() const {
    return utterance_count == 0
               ? 0.0
               : static_cast<double>(emoji_utterances) / static_cast<double>(utterance_count);
  }
  double emoticon_utterance_fraction() const {
    return utterance_count == 0 ? 0.0
                                : static_cast<double>(emoticon_utterances) /
                                      static_cast<double>(utterance_count);
  }

  std::vector<std::pair<std::string, std::size_t>> top_emoji(std::size_t k) const {
    return top_of(emoji_counts, k);
  }
  std::vector<std::pair<std::string, std::size_t>> top_emoticons(std::size_t k) const {
    return top_of(emoticon_counts, k);
  }

  nlohmann::json to_json(std::size_t top_k = 10) const {
    nlohmann::json je = nlohmann::json::array();
    for (const auto& [alias, count] : top_emoji(top_k))
      je.push_back({{"alias", alias}, {"count", count}});
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& [pat, count] : top_emoticons(top_k))
      jt.push_back({{"pattern", pat}, {"count", count}});
    return nlohmann::json{{"schema_version", 1},
                          {"utterance_count", utterance_count},
                          {"emoji_utterance_fraction", emoji_utterance_fraction()},
                          {"emoticon_utterance_fraction", emoticon_utterance_fraction()},
                          {"malformed_lines", malformed_lines},
                          {"top_emoji", std::move(je)},
                          {"top_emoticons", std::move(jt)}};
  }

 private:
  static std::vector<std::pair<std::string, std::size_t>> top_of(
      const std::map<std::string, std::size_t>& counts, std::size_t k) {
    std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (v.size() > k) v.resize(k);
    return v;
  }
};

inline void profile_utterance(CorpusReport& report, const EmojiLexicon& lexicon,
                              const std::string& line) {
  if (!utf8::is_valid(line)) {
    ++report.malformed_lines;
    return;
  }
  ++report.utterance_count;
  bool has_emoji = false, has_emoticon = false;
  for (const auto& span : segment(lexicon, line)) {
    switch (span.kind) {
      case SpanKind::Emoji:
      case SpanKind::CustomEmoji:
        has_emoji = true;
        ++report.emoji_counts[span.alias];
        break;
      case SpanKind::Emoticon:
        has_emoticon = true;
        ++report.emoticon_counts[span.raw];
        break;
      case SpanKind::Text:
        break;
    }
  }
  if (has_emoji) ++report.emoji_utterances;
  if (has_emoticon) ++report.emoticon_utterances;
}

// Single pass, one utterance per line. Invalid UTF-8 lines are counted and
// skipped.
inline CorpusReport profile(std::istream& in, const EmojiLexicon& lexicon) {
  CorpusReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    profile_utterance(report, lexicon, line);
  }
  return report;
}

inline CorpusReport profile(const std::vector<std::string>& utterances,
                            const EmojiLexicon& lexicon) {
  CorpusReport report;
  for (const auto& line : utterances) profile_utterance(report, lexicon, line);
  return report;
}

// Chunk merge; profile(x ++ y) == merge(profile(x), profile(y)).
inline CorpusReport merge(const CorpusReport& a, const CorpusReport& b) {
  CorpusReport out = a;
  out.utterance_count += b.utterance_count;
  out.emoji_utterances += b.emoji_utterances;
  out.emoticon_utterances += b.emoticon_utterances;
  out.malformed_lines += b.malformed_lines;
  for (const auto& [alias, count] : b.emoji_counts) out.emoji_counts[alias] += count;
  for (const auto& [pat, count] : b.emoticon_counts) out.emoticon_counts[pat] += count;
  return out;
}

}  // namespace emotok
