// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion carries its tolerance inline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "emotok/corpus_stats.hpp"
#include "emotok/mlm.hpp"
#include "emotok/response_selection.hpp"
#include "emotok/tokenizer.hpp"
#include "test_support.hpp"

using namespace emotok;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", number,
              name.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vocabulary words_vocab(std::vector<std::string> extra) {
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  tokens.insert(tokens.end(), extra.begin(), extra.end());
  return Vocabulary(std::move(tokens));
}

// --- criterion 1: masking distribution --------------------------------------

void criterion_masking_distribution() {
  const auto t0 = std::chrono::steady_clock::now();
  const Vocabulary& vocab = emotok::testing::toy_vocab();
  const EmojiLexicon& lex = emotok::testing::fixture_lexicon();

  TokenizedSequence seq =
      encode_pair("hello please thanks update waiting soon okay right really maybe",
                  "the pizza is ready today again and now here there", vocab, lex, 64);
  std::size_t maskable_per_seq = 0;
  for (bool m : seq.maskable) maskable_per_seq += m;

  const std::size_t target = 120000;
  const std::size_t reps = target / maskable_per_seq + 1;
  MaskingConfig cfg;  // defaults: 0.15, 80/10/10
  auto rng = make_rng(1, "masking");

  std::size_t total = 0, selected = 0, masked = 0, randomized = 0, kept = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    MaskedBatch batch = apply_masking(seq, cfg, vocab, rng);
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (!seq.maskable[i]) continue;
      ++total;
      if (batch.labels[i] == kIgnoreLabel) continue;
      ++selected;
      if (batch.input_ids[i] == vocab.mask_id()) ++masked;
      else if (batch.input_ids[i] == seq.ids[i]) ++kept;
      else ++randomized;
    }
  }
  const double sel_frac = double(selected) / double(total);
  const double mask_frac = double(masked) / double(selected);
  const double rand_frac = double(randomized) / double(selected);
  const double keep_frac = double(kept) / double(selected);
  const double elapsed = seconds_since(t0);

  const bool pass = total >= 100000 && std::abs(sel_frac - 0.15) <= 0.005 &&
                    std::abs(mask_frac - 0.80) <= 0.01 &&
                    std::abs(rand_frac - 0.10) <= 0.01 &&
                    std::abs(keep_frac - 0.10) <= 0.01 && elapsed < 5.0;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "n=%zu select=%.4f mask=%.4f random=%.4f keep=%.4f t=%.2fs", total,
                sel_frac, mask_frac, rand_frac, keep_frac, elapsed);
  report(1, "masking distribution 0.15 / 80-10-10", pass, detail);
}

// --- criterion 2: random-scorer calibration ----------------------------------

void criterion_random_scorer() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t queries = 20000, n = 100;
  std::size_t hits = 0;
  double rank_sum = 0.0;
  std::vector<double> scores(n);
  for (std::size_t q = 0; q < queries; ++q) {
    for (auto& s : scores) s = u(rng);
    const std::size_t rank = rank_of_positive(scores, 0);
    if (rank == 1) ++hits;
    rank_sum += double(rank);
  }
  const double acc = double(hits) / double(queries);
  const double mean_rank = rank_sum / double(queries);
  const double elapsed = seconds_since(t0);
  const bool pass = std::abs(acc - 0.01) <= 0.003 && std::abs(mean_rank - 50.5) <= 1.0 &&
                    elapsed < 30.0;
  char detail[120];
  std::snprintf(detail, sizeof detail, "queries=%zu acc=%.4f mean_rank=%.2f t=%.2fs",
                queries, acc, mean_rank, elapsed);
  report(2, "random-scorer 1-of-100 calibration", pass, detail);
}

// --- criterion 3: rank oracle equivalence -------------------------------------

void criterion_rank_oracle() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> nd(2, 50);
  std::uniform_int_distribution<int> coarse(0, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool pass = true;
  for (int iter = 0; iter < 1000 && pass; ++iter) {
    const int n = nd(rng);
    std::vector<double> scores(n);
    for (auto& s : scores) s = coarse(rng) == 0 ? std::round(u(rng) * 3) / 3 : u(rng);
    std::uniform_int_distribution<int> pd(0, n - 1);
    const int pos = pd(rng);
    // independent brute force: sort a copy descending; pessimistic ties put
    // the positive after every candidate scoring >= it
    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::size_t oracle =
        std::count_if(scores.begin(), scores.end(),
                      [&](double s) { return s >= scores[pos]; });  // includes itself
    if (rank_of_positive(scores, pos) != oracle) pass = false;
  }
  report(3, "rank_of_positive matches brute-force oracle", pass, "1000 random matrices");
}

// --- criterion 4: gradient checks ---------------------------------------------

void criterion_gradient_checks() {
  bool pass = true;
  double worst = 0.0;
  const double h = 1e-5;

  // tiny MLM
  {
    Vocabulary vocab = words_vocab({"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7"});
    std::mt19937_64 prng(41);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int point = 0; point < 10; ++point) {
      TinyMLM model(vocab.size(), 5, point);
      for (auto& p : model.params()) p = u(prng);
      TokenizedSequence seq;
      auto push = [&](const std::string& t, bool m) {
        seq.tokens.push_back(t);
        seq.ids.push_back(vocab.id(t));
        seq.segment_ids.push_back(0);
        seq.attention_mask.push_back(1);
        seq.maskable.push_back(m);
      };
      push("[CLS]", false);
      for (int i = 0; i < 6; ++i) push("w" + std::to_string((point + i) % 8), true);
      push("[SEP]", false);
      MaskingConfig cfg;
      cfg.select_rate = 0.5;
      auto rng = make_rng(point, "masking");
      MaskedBatch batch = apply_masking(seq, cfg, vocab, rng);
      bool any = false;
      for (TokenId l : batch.labels) any = any || l != kIgnoreLabel;
      if (!any) {
        batch.labels[1] = seq.ids[1];
        batch.input_ids[1] = vocab.mask_id();
      }
      std::vector<double> grad(model.n_params(), 0.0);
      mlm_loss_grad(model, batch, vocab.pad_id(), grad);
      for (std::size_t i = 0; i < model.n_params(); ++i) {
        TinyMLM plus = model, minus = model;
        plus.params()[i] += h;
        minus.params()[i] -= h;
        const double fd = (mlm_loss(plus, batch, vocab.pad_id()) -
                           mlm_loss(minus, batch, vocab.pad_id())) /
                          (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        const double rel = std::abs(fd - grad[i]) / denom;
        worst = std::max(worst, rel);
        if (rel >= 1e-4) pass = false;
      }
    }
  }

  // bilinear scorer
  {
    const EmojiLexicon& lex = emotok::testing::fixture_lexicon();
    Vocabulary vocab = extend_vocab(emotok::testing::toy_vocab(), lex);
    std::mt19937_64 prng(42);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    ScorerHyper hyper;
    hyper.dim = 4;
    for (int point = 0; point < 10; ++point) {
      hyper.seed = point;
      BilinearScorer scorer(vocab, lex, hyper);
      for (auto& p : scorer.params()) p = u(prng);
      auto ep = scorer.encode("hello please \xF0\x9F\x8D\x95", "the pizza is ready",
                              point % 2);
      std::vector<double> grad(scorer.params().size(), 0.0);
      scorer.loss_grad(ep, grad);
      // check every W/b parameter and a sample of embedding rows actually used
      std::set<std::size_t> indices;
      const std::size_t wb_start = vocab.size() * hyper.dim;
      for (std::size_t i = wb_start; i < scorer.params().size(); ++i) indices.insert(i);
      for (TokenId id : ep.question_ids)
        for (std::size_t k = 0; k < hyper.dim; ++k) indices.insert(id * hyper.dim + k);
      for (TokenId id : ep.candidate_ids)
        for (std::size_t k = 0; k < hyper.dim; ++k) indices.insert(id * hyper.dim + k);
      auto loss_at = [&](BilinearScorer& s) {
        std::vector<double> dummy(s.params().size(), 0.0);
        return s.loss_grad(ep, dummy);
      };
      for (std::size_t i : indices) {
        BilinearScorer plus = scorer, minus = scorer;
        plus.params()[i] += h;
        minus.params()[i] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        const double rel = std::abs(fd - grad[i]) / denom;
        worst = std::max(worst, rel);
        if (rel >= 1e-4) pass = false;
      }
    }
  }
  char detail[80];
  std::snprintf(detail, sizeof detail, "worst relative error %.2e", worst);
  report(4, "analytic gradients vs central finite differences", pass, detail);
}

// --- criterion 5: tokenizer oracles -------------------------------------------

// independent greedy reference (linear scan over all pieces per offset)
std::vector<std::string> wordpiece_reference(const std::string& word,
                                             const std::vector<std::string>& pieces,
                                             std::size_t max_word_chars) {
  if (word.empty()) return {};
  if (word.size() > max_word_chars) return {"[UNK]"};
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < word.size()) {
    std::string best;
    std::size_t best_len = 0;
    for (const auto& piece : pieces) {
      std::string body = piece;
      const bool cont = body.rfind("##", 0) == 0;
      if (cont) body = body.substr(2);
      if (cont != (start > 0) || body.empty()) continue;
      if (body.size() <= best_len || body.size() > word.size() - start) continue;
      if (word.compare(start, body.size(), body) == 0) {
        best = piece;
        best_len = body.size();
      }
    }
    if (best_len == 0) return {"[UNK]"};
    out.push_back(best);
    start += best_len;
  }
  return out;
}

void criterion_tokenizer_oracle() {
  bool pass = true;
  std::string why;

  // 5a: wordpiece vs reference on 10,000 random (vocab, word) instances
  {
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<int> n_pieces(1, 50);
    std::uniform_int_distribution<int> piece_len(1, 4);
    std::uniform_int_distribution<int> word_len(0, 12);
    std::uniform_int_distribution<int> letter(0, 3);
    std::uniform_int_distribution<int> cont(0, 1);
    for (int iter = 0; iter < 10000 && pass; ++iter) {
      std::vector<std::string> pieces;
      std::set<std::string> seen;
      for (int i = n_pieces(rng); i > 0; --i) {
        std::string p = cont(rng) ? "##" : "";
        for (int k = piece_len(rng); k > 0; --k) p += char('a' + letter(rng));
        if (seen.insert(p).second) pieces.push_back(p);
      }
      std::string word;
      for (int k = word_len(rng); k > 0; --k) word += char('a' + letter(rng));
      Vocabulary vocab = words_vocab(pieces);
      if (wordpiece(word, vocab) != wordpiece_reference(word, pieces, kDefaultMaxWordChars)) {
        pass = false;
        why = "wordpiece mismatch on '" + word + "'";
      }
    }
  }

  // 5b+5c: normalize idempotence and span coverage on 10,000 emoji-bearing strings
  if (pass) {
    const EmojiLexicon& lex = emotok::testing::fixture_lexicon();
    std::mt19937_64 rng(52);
    std::uniform_int_distribution<int> n_parts(1, 10);
    std::uniform_int_distribution<int> kind(0, 4);
    std::uniform_int_distribution<std::size_t> pick_entry(0, lex.size() - 1);
    std::uniform_int_distribution<int> spaced(0, 1);
    static const std::vector<std::string> words = {"hi", "ok", "12:30", "a?!", "x"};
    std::uniform_int_distribution<std::size_t> pick_word(0, words.size() - 1);
    for (int iter = 0; iter < 10000 && pass; ++iter) {
      std::string s;
      for (int i = n_parts(rng); i > 0; --i) {
        switch (kind(rng)) {
          case 0: s += words[pick_word(rng)]; break;
          case 1: {
            const auto& e = lex.entries()[pick_entry(rng)];
            if (!e.codepoints.empty()) s += utf8::encode(e.codepoints);
            break;
          }
          case 2: s += ":" + lex.entries()[pick_entry(rng)].alias + ":"; break;
          case 3: s += ":-)"; break;
          case 4: s += ":nosuchalias:"; break;
        }
        if (spaced(rng)) s += " ";
      }
      std::string cat;
      for (const auto& span : segment(lex, s)) cat += span.raw;
      if (cat != s) {
        pass = false;
        why = "span coverage broken";
        break;
      }
      const std::string once = normalize(lex, s);
      if (normalize(lex, once) != once) {
        pass = false;
        why = "normalize not idempotent on '" + s + "'";
      }
    }
  }
  report(5, "tokenizer oracles (wordpiece, idempotence, coverage)", pass,
         pass ? "10000 instances each" : why);
}

// --- criterion 6: desk-scale Table-2 direction --------------------------------

void criterion_desk_scale_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  const EmojiLexicon& lex = emotok::testing::fixture_lexicon();
  const Vocabulary& base = emotok::testing::toy_vocab();

  const std::uint64_t seed = 2020;
  auto tuples = generate_synthetic_corpus(2000, 0.0875, lex, seed);
  auto [train, test] = split_dataset(tuples, 0.7, seed);
  auto pairs = build_train_pairs(train, seed);

  auto run = [&](EmojiMode mode) {
    Vocabulary vocab = mode == EmojiMode::Aliased ? extend_vocab(base, lex) : base;
    ScorerHyper hyper;
    hyper.dim = 32;
    hyper.epochs = 10;
    hyper.seed = seed;
    hyper.emoji_mode = mode;
    hyper.adam.learning_rate = 1e-2;
    BilinearScorer scorer = train_scorer(pairs, vocab, lex, hyper);
    auto sets = build_eval_sets(test, tuples, 20, seed);
    return evaluate(scorer, sets);
  };

  EvalReport aliased = run(EmojiMode::Aliased);
  EvalReport stripped = run(EmojiMode::Stripped);
  const double gap = aliased.accuracy_1_of_n - stripped.accuracy_1_of_n;
  const double elapsed = seconds_since(t0);
  const bool pass = gap >= 0.05 && elapsed < 600.0;
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "aliased acc=%.3f rank=%.1f | stripped acc=%.3f rank=%.1f | gap=%.3f t=%.0fs",
                aliased.accuracy_1_of_n, aliased.mean_rank, stripped.accuracy_1_of_n,
                stripped.mean_rank, gap, elapsed);
  report(6, "emoji-aliased beats emoji-stripped by >= 5pp at n=20", pass, detail);
}

// --- criterion 7: perplexity consistency ---------------------------------------

void criterion_perplexity() {
  Vocabulary vocab = words_vocab({"w0", "w1", "w2", "w3", "w4"});  // |V| = 10
  std::vector<TokenizedSequence> corpus;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> w(0, 4);
  for (int s = 0; s < 20; ++s) {
    TokenizedSequence seq;
    auto push = [&](const std::string& t, bool m) {
      seq.tokens.push_back(t);
      seq.ids.push_back(vocab.id(t));
      seq.segment_ids.push_back(0);
      seq.attention_mask.push_back(1);
      seq.maskable.push_back(m);
    };
    push("[CLS]", false);
    for (int i = 0; i < 8; ++i) push("w" + std::to_string(w(rng)), true);
    push("[SEP]", false);
    corpus.push_back(seq);
  }
  MaskingConfig cfg;
  cfg.seed = 77;

  // uniform model: all parameters zero
  TinyMLM uniform(vocab.size(), 4, 0);
  std::fill(uniform.params().begin(), uniform.params().end(), 0.0);
  const double ppl_uniform = perplexity(uniform, corpus, cfg, vocab);
  const bool uniform_ok = std::abs(ppl_uniform - double(vocab.size())) < 1e-9;

  // consistency: perplexity == exp(aggregate loss)
  TinyMLM model(vocab.size(), 4, 9);
  auto mask_rng = make_rng(cfg.seed, "masking");
  double ce = 0.0;
  std::size_t n = 0;
  for (const auto& seq : corpus) {
    MaskedBatch b = apply_masking(seq, cfg, vocab, mask_rng);
    auto stats = mlm_loss_stats(model, b, vocab.pad_id());
    ce += stats.ce_sum;
    n += stats.n_labeled;
  }
  const double ppl = perplexity(model, corpus, cfg, vocab);
  const bool consistent = std::abs(ppl - std::exp(ce / double(n))) < 1e-9;

  char detail[120];
  std::snprintf(detail, sizeof detail, "uniform ppl=%.12f (|V|=%zu), consistency dev=%.1e",
                ppl_uniform, vocab.size(), std::abs(ppl - std::exp(ce / double(n))));
  report(7, "perplexity equals |V| for uniform and exp(aggregate loss)",
         uniform_ok && consistent, detail);
}

// --- criterion 8: stats mergeability -------------------------------------------

void criterion_stats_merge() {
  const EmojiLexicon& lex = emotok::testing::fixture_lexicon();
  auto tuples = generate_synthetic_corpus(400, 0.3, lex, 88);
  std::vector<std::string> lines;
  for (const auto& t : tuples) {
    lines.push_back(t.question);
    lines.push_back(t.answer);
  }
  lines.push_back("smiley :-) with \xF0\x9F\x91\x8D");
  lines.push_back(std::string("\xFF invalid"));

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> cut_dist(0, lines.size());
  bool pass = true;
  for (int iter = 0; iter < 100 && pass; ++iter) {
    const std::size_t cut = cut_dist(rng);
    std::vector<std::string> x(lines.begin(), lines.begin() + cut);
    std::vector<std::string> y(lines.begin() + cut, lines.end());
    const CorpusReport whole = profile(lines, lex);
    const CorpusReport merged = merge(profile(x, lex), profile(y, lex));
    if (whole.to_json(100000) != merged.to_json(100000)) pass = false;
  }
  report(8, "profile(x ++ y) == merge(profile(x), profile(y))", pass,
         "100 random splits, exact");
}

}  // namespace

int main() {
  criterion_masking_distribution();
  criterion_random_scorer();
  criterion_rank_oracle();
  criterion_gradient_checks();
  criterion_tokenizer_oracle();
  criterion_desk_scale_direction();
  criterion_perplexity();
  criterion_stats_merge();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
