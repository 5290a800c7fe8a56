// emotok: emoji-aware tokenization and response-selection toolkit.
//
// Subcommands cover the full pipeline: lexicon-build, normalize, tokenize,
// stats, mask, mlm-train, synth, rs-train, rs-eval, compare. All randomness
// flows from --seed through named substreams, so identical flags give
// byte-identical JSON artifacts.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "emotok/corpus_stats.hpp"
#include "emotok/emoji_lexicon.hpp"
#include "emotok/mlm.hpp"
#include "emotok/response_selection.hpp"
#include "emotok/segmenter.hpp"
#include "emotok/tokenizer.hpp"

namespace {

using namespace emotok;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Accepts either the Unicode emoji-test text format or a serialized lexicon
// JSON document (output of lexicon-build).
EmojiLexicon load_lexicon_file(const std::string& path,
                               const std::vector<std::string>& custom_aliases = {}) {
  const std::string data = read_file(path);
  const std::size_t first = data.find_first_not_of(" \t\r\n");
  EmojiLexicon lex;
  if (first != std::string::npos && data[first] == '{') {
    lex = EmojiLexicon::from_json(json::parse(data));
  } else {
    lex = load_unicode_lexicon(data);
  }
  for (const auto& alias : custom_aliases) lex = register_custom(lex, alias);
  return lex;
}

std::vector<QATuple> load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_jsonl_dataset(f);
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << doc.dump(2) << "\n";
}

EmojiMode parse_mode(const std::string& s) {
  if (s == "aliased") return EmojiMode::Aliased;
  if (s == "stripped") return EmojiMode::Stripped;
  throw CLI::ValidationError("--emoji-mode must be 'aliased' or 'stripped'");
}

struct RsArtifacts {
  EvalReport report;
  std::vector<double> epoch_losses;
};

// Shared train+eval path for rs-train/rs-eval/compare: split, build pairs,
// train the bilinear scorer, build eval sets from the full answer pool and
// evaluate the held-out test tuples.
RsArtifacts run_response_selection(const std::vector<QATuple>& tuples,
                                   const Vocabulary& base_vocab, const EmojiLexicon& lexicon,
                                   EmojiMode mode, double train_fraction, std::size_t n,
                                   std::uint64_t seed, std::size_t epochs, double lr,
                                   std::size_t dim, std::size_t max_len) {
  Vocabulary vocab = mode == EmojiMode::Aliased ? extend_vocab(base_vocab, lexicon)
                                                : base_vocab;
  auto [train, test] = split_dataset(tuples, train_fraction, seed);
  auto pairs = build_train_pairs(train, seed);
  ScorerHyper hyper;
  hyper.dim = dim;
  hyper.epochs = epochs;
  hyper.max_len = max_len;
  hyper.seed = seed;
  hyper.emoji_mode = mode;
  hyper.adam.learning_rate = lr;
  RsArtifacts out;
  BilinearScorer scorer = train_scorer(pairs, vocab, lexicon, hyper, &out.epoch_losses);
  auto sets = build_eval_sets(test, tuples, n, seed);
  out.report = evaluate(scorer, sets);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emoji-aware tokenization and response selection toolkit"};
  app.require_subcommand(1);

  std::string lexicon_path, vocab_path, data_path, out_path = "-";
  std::vector<std::string> custom_aliases;
  std::vector<std::string> input_files;
  std::uint64_t seed = 0;
  std::size_t max_len = 128;
  std::size_t n_candidates = 100;
  double train_fraction = 0.7;
  std::size_t epochs = 10;
  double learning_rate = 5e-5;
  double rs_learning_rate = 1e-2;
  std::size_t dim = 32;
  std::string emoji_mode_str = "aliased";
  double select_rate = 0.15;
  std::size_t n_tuples = 2000;
  double emoji_rate = 0.0875;
  bool alias_emoticons = false;

  auto* lexicon_build = app.add_subcommand(
      "lexicon-build", "parse an emoji-test file into a lexicon JSON document");
  lexicon_build->add_option("--input", data_path, "emoji-test format file")->required();
  lexicon_build->add_option("--custom", custom_aliases, "custom :alias: entries to add");
  lexicon_build->add_option("--out", out_path, "output path ('-' for stdout)");

  auto* normalize_cmd = app.add_subcommand(
      "normalize", "rewrite emoji to :alias: tokens, stdin line-by-line to stdout");
  normalize_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  normalize_cmd->add_option("--emoji-mode", emoji_mode_str, "aliased|stripped");
  normalize_cmd->add_flag("--alias-emoticons", alias_emoticons,
                          "also rewrite emoticons to :alias: tokens");
  normalize_cmd->add_option("--custom", custom_aliases, "custom aliases");

  auto* tokenize_cmd = app.add_subcommand(
      "tokenize", "encode tab-separated sentence pairs from stdin as JSON lines");
  tokenize_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  tokenize_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  tokenize_cmd->add_option("--max-len", max_len, "maximum sequence length");
  tokenize_cmd->add_option("--emoji-mode", emoji_mode_str, "aliased|stripped");

  auto* stats_cmd =
      app.add_subcommand("stats", "profile emoji/emoticon usage of text corpora");
  stats_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  stats_cmd->add_option("files", input_files, "line-per-utterance text or JSONL datasets");
  stats_cmd->add_option("--out", out_path, "output path ('-' for stdout)");

  auto* mask_cmd = app.add_subcommand(
      "mask", "demo 80/10/10 masking over tokenized pairs from stdin");
  mask_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  mask_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  mask_cmd->add_option("--seed", seed, "run seed");
  mask_cmd->add_option("--select-rate", select_rate, "selection probability");
  mask_cmd->add_option("--max-len", max_len, "maximum sequence length");

  auto* mlm_cmd = app.add_subcommand("mlm-train", "train the tiny masked LM");
  mlm_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  mlm_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  mlm_cmd->add_option("--data", data_path, "JSONL dataset")->required();
  mlm_cmd->add_option("--seed", seed, "run seed");
  mlm_cmd->add_option("--epochs", epochs, "training epochs");
  mlm_cmd->add_option("--lr", learning_rate, "Adam learning rate");
  mlm_cmd->add_option("--dim", dim, "embedding width");
  mlm_cmd->add_option("--max-len", max_len, "maximum sequence length");
  mlm_cmd->add_option("--select-rate", select_rate, "masking selection rate");
  mlm_cmd->add_option("--out", out_path, "checkpoint output path")->required();

  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic QA dataset (JSONL)");
  synth_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  synth_cmd->add_option("--n", n_tuples, "tuple count");
  synth_cmd->add_option("--emoji-rate", emoji_rate, "fraction of emoji-bearing tuples");
  synth_cmd->add_option("--seed", seed, "run seed");
  synth_cmd->add_option("--out", out_path, "output path ('-' for stdout)");

  auto* rs_train_cmd = app.add_subcommand(
      "rs-train", "train the bilinear response-selection scorer");
  rs_train_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  rs_train_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  rs_train_cmd->add_option("--data", data_path, "JSONL dataset")->required();
  rs_train_cmd->add_option("--seed", seed, "run seed");
  rs_train_cmd->add_option("--epochs", epochs, "training epochs");
  rs_train_cmd->add_option("--lr", rs_learning_rate, "Adam learning rate");
  rs_train_cmd->add_option("--dim", dim, "embedding width");
  rs_train_cmd->add_option("--max-len", max_len, "maximum sequence length");
  rs_train_cmd->add_option("--train-fraction", train_fraction, "training split fraction");
  rs_train_cmd->add_option("--emoji-mode", emoji_mode_str, "aliased|stripped");
  rs_train_cmd->add_option("--out", out_path, "scorer artifact output path")->required();

  auto* rs_eval_cmd = app.add_subcommand(
      "rs-eval", "evaluate 1-of-N accuracy and mean rank on the held-out split");
  rs_eval_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  rs_eval_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  rs_eval_cmd->add_option("--data", data_path, "JSONL dataset")->required();
  rs_eval_cmd->add_option("--seed", seed, "run seed");
  rs_eval_cmd->add_option("--epochs", epochs, "training epochs");
  rs_eval_cmd->add_option("--lr", rs_learning_rate, "Adam learning rate");
  rs_eval_cmd->add_option("--dim", dim, "embedding width");
  rs_eval_cmd->add_option("--max-len", max_len, "maximum sequence length");
  rs_eval_cmd->add_option("--train-fraction", train_fraction, "training split fraction");
  rs_eval_cmd->add_option("--n", n_candidates, "candidates per query");
  rs_eval_cmd->add_option("--emoji-mode", emoji_mode_str, "aliased|stripped");
  rs_eval_cmd->add_option("--out", out_path, "report output path ('-' for stdout)");

  auto* compare_cmd = app.add_subcommand(
      "compare", "run the aliased and stripped pipelines and report both");
  compare_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  compare_cmd->add_option("--lexicon", lexicon_path, "lexicon file")->required();
  compare_cmd->add_option("--data", data_path, "JSONL dataset")->required();
  compare_cmd->add_option("--seed", seed, "run seed");
  compare_cmd->add_option("--epochs", epochs, "training epochs");
  compare_cmd->add_option("--lr", rs_learning_rate, "Adam learning rate");
  compare_cmd->add_option("--dim", dim, "embedding width");
  compare_cmd->add_option("--max-len", max_len, "maximum sequence length");
  compare_cmd->add_option("--train-fraction", train_fraction, "training split fraction");
  compare_cmd->add_option("--n", n_candidates, "candidates per query");
  compare_cmd->add_option("--out", out_path, "report output path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  auto emit = [&](const json& doc) {
    if (out_path == "-") std::cout << doc.dump(2) << "\n";
    else write_json_file(out_path, doc);
  };

  try {
    if (lexicon_build->parsed()) {
      EmojiLexicon lex = load_lexicon_file(data_path, custom_aliases);
      json doc = lex.to_json();
      doc["schema_version"] = 1;
      emit(doc);
      return 0;
    }

    if (normalize_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path, custom_aliases);
      const EmojiMode mode = parse_mode(emoji_mode_str);
      std::string line;
      while (std::getline(std::cin, line)) {
        if (alias_emoticons) {
          // opt-in: rewrite emoticons through custom aliases first
          std::string rewritten;
          for (const auto& span : segment(lex, line)) {
            if (span.kind == SpanKind::Emoticon) rewritten += " :emoticon: ";
            else rewritten += span.raw;
          }
          EmojiLexicon lex2 = lex.find_alias("emoticon") ? lex
                                                         : register_custom(lex, "emoticon");
          std::cout << normalize(lex2, rewritten, mode) << "\n";
        } else {
          std::cout << normalize(lex, line, mode) << "\n";
        }
      }
      return 0;
    }

    if (tokenize_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path);
      Vocabulary vocab = extend_vocab(Vocabulary::from_file(vocab_path), lex);
      EncodeOptions opts;
      opts.emoji_mode = parse_mode(emoji_mode_str);
      std::string line;
      while (std::getline(std::cin, line)) {
        const std::size_t tab = line.find('\t');
        const std::string a = tab == std::string::npos ? line : line.substr(0, tab);
        const std::string b = tab == std::string::npos ? "" : line.substr(tab + 1);
        TokenizedSequence seq = encode_pair(a, b, vocab, lex, max_len, opts);
        json j{{"tokens", seq.tokens},
               {"ids", seq.ids},
               {"segment_ids", seq.segment_ids}};
        std::cout << j.dump() << "\n";
      }
      return 0;
    }

    if (stats_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path);
      CorpusReport report;
      auto feed = [&](std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
          if (!line.empty() && line.back() == '\r') line.pop_back();
          // JSONL datasets profile both utterances of each tuple
          if (!line.empty() && line.front() == '{') {
            try {
              json j = json::parse(line);
              if (j.contains("question") && j.contains("answer")) {
                profile_utterance(report, lex, j["question"].get<std::string>());
                profile_utterance(report, lex, j["answer"].get<std::string>());
                continue;
              }
            } catch (const json::parse_error&) {
              // fall through: treat as plain text
            }
          }
          profile_utterance(report, lex, line);
        }
      };
      if (input_files.empty()) {
        feed(std::cin);
      } else {
        for (const auto& path : input_files) {
          std::ifstream f(path);
          if (!f) throw std::runtime_error("cannot open " + path);
          feed(f);
        }
      }
      if (report.utterance_count == 0)
        std::cerr << "warning: no utterances profiled\n";
      emit(report.to_json());
      if (out_path != "-") {
        std::cout << "utterances          " << report.utterance_count << "\n"
                  << "emoji fraction      " << report.emoji_utterance_fraction() << "\n"
                  << "emoticon fraction   " << report.emoticon_utterance_fraction() << "\n";
      }
      return 0;
    }

    if (mask_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path);
      Vocabulary vocab = extend_vocab(Vocabulary::from_file(vocab_path), lex);
      MaskingConfig cfg;
      cfg.select_rate = select_rate;
      cfg.seed = seed;
      auto rng = make_rng(seed, "masking");
      std::string line;
      while (std::getline(std::cin, line)) {
        const std::size_t tab = line.find('\t');
        const std::string a = tab == std::string::npos ? line : line.substr(0, tab);
        const std::string b = tab == std::string::npos ? "" : line.substr(tab + 1);
        TokenizedSequence seq = encode_pair(a, b, vocab, lex, max_len);
        MaskedBatch batch = apply_masking(seq, cfg, vocab, rng);
        std::vector<std::string> masked_tokens;
        for (TokenId id : batch.input_ids) masked_tokens.push_back(vocab.token(id));
        json j{{"input_ids", batch.input_ids},
               {"labels", batch.labels},
               {"tokens", masked_tokens}};
        std::cout << j.dump() << "\n";
      }
      return 0;
    }

    if (synth_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path);
      auto tuples = generate_synthetic_corpus(n_tuples, emoji_rate, lex, seed);
      if (out_path == "-") {
        write_jsonl_dataset(std::cout, tuples);
      } else {
        std::ofstream f(out_path);
        if (!f) throw std::runtime_error("cannot write " + out_path);
        write_jsonl_dataset(f, tuples);
      }
      return 0;
    }

    if (mlm_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path);
      Vocabulary vocab = extend_vocab(Vocabulary::from_file(vocab_path), lex);
      auto tuples = load_dataset(data_path);
      std::vector<TokenizedSequence> corpus;
      for (const auto& t : tuples)
        corpus.push_back(encode_pair(t.question, t.answer, vocab, lex, max_len));
      MaskingConfig cfg;
      cfg.seed = seed;
      cfg.select_rate = select_rate;
      TinyMLM model(vocab.size(), dim, seed);
      AdamConfig adam;
      adam.learning_rate = learning_rate;
      auto result = train_mlm(corpus, cfg, model, epochs, vocab, adam);
      save_mlm(model, out_path);
      MaskingConfig eval_cfg = cfg;
      eval_cfg.seed = seed + 1;
      json j{{"schema_version", 1},
             {"epochs", epochs},
             {"epoch_losses", result.epoch_losses},
             {"perplexity", perplexity(model, corpus, eval_cfg, vocab)},
             {"checkpoint", out_path}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (rs_train_cmd->parsed() || rs_eval_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path);
      Vocabulary base = Vocabulary::from_file(vocab_path);
      auto tuples = load_dataset(data_path);
      const EmojiMode mode = parse_mode(emoji_mode_str);
      RsArtifacts art = run_response_selection(
          tuples, base, lex, mode, train_fraction, n_candidates, seed, epochs,
          rs_learning_rate, dim, max_len);
      json j = art.report.to_json();
      j["seed"] = seed;
      j["emoji_mode"] = emoji_mode_str;
      j["epoch_losses"] = art.epoch_losses;
      emit(j);
      return 0;
    }

    if (compare_cmd->parsed()) {
      EmojiLexicon lex = load_lexicon_file(lexicon_path);
      Vocabulary base = Vocabulary::from_file(vocab_path);
      auto tuples = load_dataset(data_path);
      RsArtifacts aliased = run_response_selection(
          tuples, base, lex, EmojiMode::Aliased, train_fraction, n_candidates, seed,
          epochs, rs_learning_rate, dim, max_len);
      RsArtifacts stripped = run_response_selection(
          tuples, base, lex, EmojiMode::Stripped, train_fraction, n_candidates, seed,
          epochs, rs_learning_rate, dim, max_len);
      json j{{"schema_version", 1},
             {"seed", seed},
             {"n", n_candidates},
             {"aliased", aliased.report.to_json()},
             {"stripped", stripped.report.to_json()}};
      emit(j);
      char line[160];
      std::snprintf(line, sizeof line, "%-28s %10s %10s\n", "model",
                    ("1-of-" + std::to_string(n_candidates) + " ACC").c_str(), "mean rank");
      std::cerr << line;
      std::snprintf(line, sizeof line, "%-28s %9.1f%% %10.1f\n", "baseline (stripped)",
                    100.0 * stripped.report.accuracy_1_of_n, stripped.report.mean_rank);
      std::cerr << line;
      std::snprintf(line, sizeof line, "%-28s %9.1f%% %10.1f\n", "with emoji tokens",
                    100.0 * aliased.report.accuracy_1_of_n, aliased.report.mean_rank);
      std::cerr << line;
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
