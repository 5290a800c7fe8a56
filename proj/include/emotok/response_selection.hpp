#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "emotok/adam.hpp"
#include "emotok/rng.hpp"
#include "emotok/tokenizer.hpp"

namespace emotok {

struct SelectionError : std::runtime_error {
  explicit SelectionError(const std::string& what) : std::runtime_error(what) {}
};

struct QATuple {
  std::string question;
  std::string answer;
  std::uint64_t id = 0;
};

struct CandidateSet {
  std::string question;
  std::vector<std::string> candidates;
  std::size_t positive_index = 0;
};

struct EvalReport {
  std::size_t n = 0;                // candidates per query
  std::vector<std::size_t> ranks;   // one per query, in [1, n]
  double accuracy_1_of_n = 0.0;
  double mean_rank = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"schema_version", 1},
                          {"n", n},
                          {"ranks", ranks},
                          {"accuracy_1_of_n", accuracy_1_of_n},
                          {"mean_rank", mean_rank},
                          {"queries", ranks.size()}};
  }
};

// Behavioral contract: higher score means a better question/candidate match;
// deterministic for fixed parameters.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const std::string& question, const std::string& candidate) const = 0;
};

struct LabeledPair {
  std::string question;
  std::string response;
  int label = 0;  // 1 positive, 0 negative
};

// --- dataset construction ---------------------------------------------------

inline std::pair<std::vector<QATuple>, std::vector<QATuple>> split_dataset(
    std::vector<QATuple> tuples, double train_fraction, std::uint64_t seed) {
  if (tuples.size() < 10) throw SelectionError("split_dataset: need at least 10 tuples");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw SelectionError("split_dataset: train_fraction must lie in (0, 1)");
  auto rng = make_rng(seed, "split");
  std::shuffle(tuples.begin(), tuples.end(), rng);
  const std::size_t n_train = static_cast<std::size_t>(
      std::ceil(train_fraction * static_cast<double>(tuples.size())));
  std::vector<QATuple> train(tuples.begin(), tuples.begin() + n_train);
  std::vector<QATuple> test(tuples.begin() + n_train, tuples.end());
  return {std::move(train), std::move(test)};
}

// One positive and one sampled negative per tuple; balanced by construction.
inline std::vector<LabeledPair> build_train_pairs(const std::vector<QATuple>& train,
                                                  std::uint64_t seed) {
  if (train.size() < 2)
    throw SelectionError("build_train_pairs: need at least 2 tuples to sample negatives");
  auto rng = make_rng(seed, "negatives");
  std::vector<LabeledPair> pairs;
  pairs.reserve(train.size() * 2);
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  for (std::size_t i = 0; i < train.size(); ++i) {
    pairs.push_back({train[i].question, train[i].answer, 1});
    std::size_t j = i;
    while (j == i) j = pick(rng);
    pairs.push_back({train[i].question, train[j].answer, 0});
  }
  return pairs;
}

// Per test tuple: the true answer plus n-1 answers sampled without replacement
// from other tuples in the pool, then shuffled.
inline std::vector<CandidateSet> build_eval_sets(const std::vector<QATuple>& test,
                                                 const std::vector<QATuple>& pool,
                                                 std::size_t n, std::uint64_t seed) {
  if (n < 2) throw SelectionError("build_eval_sets: n must be at least 2");
  if (pool.size() < n)
    throw SelectionError("build_eval_sets: candidate pool smaller than n=" +
                         std::to_string(n));
  auto rng = make_rng(seed, "eval-negatives");
  std::vector<CandidateSet> sets;
  sets.reserve(test.size());
  for (const auto& t : test) {
    std::vector<std::size_t> others;
    others.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (pool[i].id != t.id) others.push_back(i);
    if (others.size() < n - 1)
      throw SelectionError("build_eval_sets: candidate pool smaller than n=" +
                           std::to_string(n));
    // partial Fisher-Yates for n-1 without-replacement draws
    for (std::size_t k = 0; k < n - 1; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, others.size() - 1);
      std::swap(others[k], others[pick(rng)]);
    }
    CandidateSet set;
    set.question = t.question;
    set.candidates.push_back(t.answer);
    for (std::size_t k = 0; k < n - 1; ++k) set.candidates.push_back(pool[others[k]].answer);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::string> shuffled(n);
    for (std::size_t k = 0; k < n; ++k) {
      shuffled[k] = std::move(set.candidates[order[k]]);
      if (order[k] == 0) set.positive_index = k;
    }
    set.candidates = std::move(shuffled);
    sets.push_back(std::move(set));
  }
  return sets;
}

// --- ranking ----------------------------------------------------------------

// Pessimistic ties: rank = 1 + #{j != pos : score_j >= score_pos}.
inline std::size_t rank_of_positive(const std::vector<double>& scores,
                                    std::size_t positive_index) {
  if (scores.size() < 2) throw SelectionError("rank_of_positive: need at least 2 scores");
  if (positive_index >= scores.size())
    throw SelectionError("rank_of_positive: positive_index out of range");
  const double pos = scores[positive_index];
  if (!std::isfinite(pos)) throw SelectionError("rank_of_positive: non-finite score");
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!std::isfinite(scores[j])) throw SelectionError("rank_of_positive: non-finite score");
    if (j != positive_index && scores[j] >= pos) ++rank;
  }
  return rank;
}

inline EvalReport evaluate(const Scorer& scorer, const std::vector<CandidateSet>& sets) {
  if (sets.empty()) throw SelectionError("evaluate: no candidate sets");
  const std::size_t n = sets.front().candidates.size();
  EvalReport report;
  report.n = n;
  report.ranks.reserve(sets.size());
  std::size_t hits = 0;
  for (const auto& set : sets) {
    if (set.candidates.size() != n)
      throw SelectionError("evaluate: mixed candidate counts across sets");
    std::vector<double> scores;
    scores.reserve(n);
    for (const auto& c : set.candidates) scores.push_back(scorer.score(set.question, c));
    const std::size_t rank = rank_of_positive(scores, set.positive_index);
    if (rank == 1) ++hits;
    report.ranks.push_back(rank);
  }
  report.accuracy_1_of_n = static_cast<double>(hits) / static_cast<double>(report.ranks.size());
  std::vector<double> rr(report.ranks.begin(), report.ranks.end());
  report.mean_rank = pairwise_sum(rr) / static_cast<double>(rr.size());
  return report;
}

// --- trainable bilinear scorer ------------------------------------------------

struct ScorerHyper {
  std::size_t dim = 32;
  std::size_t epochs = 10;
  std::size_t max_len = 128;
  std::uint64_t seed = 0;
  EmojiMode emoji_mode = EmojiMode::Aliased;
  AdamConfig adam = {};  // lr 5e-5, eps 1e-8
};

// score = sigmoid(u^T W v + b) where u, v are mean token embeddings of the
// question and candidate halves of an encode_pair. Embeddings, W and b are all
// trained with binary cross-entropy. A desk-scale proxy for a pair scorer:
// small enough to train in seconds, large enough that emoji tokens matter.
class BilinearScorer : public Scorer {
 public:
  BilinearScorer(Vocabulary vocab, EmojiLexicon lexicon, ScorerHyper hyper)
      : vocab_(std::move(vocab)), lexicon_(std::move(lexicon)), hyper_(hyper) {
    const std::size_t V = vocab_.size();
    const std::size_t d = hyper_.dim;
    params_.assign(V * d + d * d + 1, 0.0);
    auto rng = make_rng(hyper_.seed, "init");
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (std::size_t i = 0; i < V * d + d * d; ++i) params_[i] = u(rng);
  }

  struct EncodedPair {
    std::vector<TokenId> question_ids;
    std::vector<TokenId> candidate_ids;
    double label = 0.0;
  };

  EncodedPair encode(const std::string& question, const std::string& candidate,
                     double label = 0.0) const {
    EncodeOptions opts;
    opts.emoji_mode = hyper_.emoji_mode;
    const TokenizedSequence seq =
        encode_pair(question, candidate, vocab_, lexicon_, hyper_.max_len, opts);
    EncodedPair ep;
    ep.label = label;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (!seq.maskable[i]) continue;  // skip [CLS]/[SEP]
      (seq.segment_ids[i] == 0 ? ep.question_ids : ep.candidate_ids).push_back(seq.ids[i]);
    }
    return ep;
  }

  double score(const std::string& question, const std::string& candidate) const override {
    return score_encoded(encode(question, candidate));
  }

  double score_encoded(const EncodedPair& ep) const {
    const std::size_t d = hyper_.dim;
    std::vector<double> u = mean_embedding(ep.question_ids);
    std::vector<double> v = mean_embedding(ep.candidate_ids);
    const double* W = params_.data() + vocab_.size() * d;
    double z = params_.back();
    for (std::size_t i = 0; i < d; ++i) {
      double wv = 0.0;
      for (std::size_t j = 0; j < d; ++j) wv += W[i * d + j] * v[j];
      z += u[i] * wv;
    }
    return 1.0 / (1.0 + std::exp(-z));
  }

  // BCE loss and analytic gradient for one pair; gradient accumulates.
  double loss_grad(const EncodedPair& ep, std::vector<double>& grad) const {
    const std::size_t V = vocab_.size();
    const std::size_t d = hyper_.dim;
    if (grad.size() != params_.size())
      throw SelectionError("loss_grad: gradient buffer size mismatch");
    const std::vector<double> u = mean_embedding(ep.question_ids);
    const std::vector<double> v = mean_embedding(ep.candidate_ids);
    const double* W = params_.data() + V * d;

    std::vector<double> Wv(d, 0.0), Wtu(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        Wv[i] += W[i * d + j] * v[j];
        Wtu[j] += W[i * d + j] * u[i];
      }
    double z = params_.back();
    for (std::size_t i = 0; i < d; ++i) z += u[i] * Wv[i];
    const double s = 1.0 / (1.0 + std::exp(-z));
    const double y = ep.label;
    // numerically stable BCE: log(1+e^-z) = softplus(-z)
    auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
    const double loss = softplus(z) - y * z;  // == -(y ln s + (1-y) ln(1-s))
    const double dz = s - y;

    double* gE = grad.data();
    double* gW = grad.data() + V * d;
    grad.back() += dz;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) gW[i * d + j] += dz * u[i] * v[j];
    if (!ep.question_ids.empty()) {
      const double inv = 1.0 / static_cast<double>(ep.question_ids.size());
      for (TokenId id : ep.question_ids) {
        double* row = gE + static_cast<std::size_t>(id) * d;
        for (std::size_t i = 0; i < d; ++i) row[i] += dz * Wv[i] * inv;
      }
    }
    if (!ep.candidate_ids.empty()) {
      const double inv = 1.0 / static_cast<double>(ep.candidate_ids.size());
      for (TokenId id : ep.candidate_ids) {
        double* row = gE + static_cast<std::size_t>(id) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += dz * Wtu[j] * inv;
      }
    }
    return loss;
  }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const Vocabulary& vocab() const { return vocab_; }
  const EmojiLexicon& lexicon() const { return lexicon_; }
  const ScorerHyper& hyper() const { return hyper_; }

  std::vector<double> train(const std::vector<LabeledPair>& pairs) {
    if (pairs.empty()) throw SelectionError("train: empty pair list");
    std::vector<EncodedPair> encoded;
    encoded.reserve(pairs.size());
    for (const auto& p : pairs)
      encoded.push_back(encode(p.question, p.response, static_cast<double>(p.label)));
    AdamOptimizer opt(params_.size(), hyper_.adam);
    auto rng = make_rng(hyper_.seed, "scorer-train");
    std::vector<double> grad(params_.size(), 0.0);
    std::vector<double> epoch_losses;
    std::vector<std::size_t> order(encoded.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < hyper_.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<double> losses;
      losses.reserve(encoded.size());
      for (std::size_t idx : order) {
        std::fill(grad.begin(), grad.end(), 0.0);
        losses.push_back(loss_grad(encoded[idx], grad));
        opt.step(params_, grad);
      }
      epoch_losses.push_back(pairwise_sum(losses) / static_cast<double>(losses.size()));
    }
    return epoch_losses;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"magic", "EMOTOK-SCORER-1"},
                          {"dim", hyper_.dim},
                          {"max_len", hyper_.max_len},
                          {"emoji_mode", hyper_.emoji_mode == EmojiMode::Aliased
                                             ? "aliased" : "stripped"},
                          {"params", params_}};
  }

 private:
  std::vector<double> mean_embedding(const std::vector<TokenId>& ids) const {
    const std::size_t d = hyper_.dim;
    std::vector<double> out(d, 0.0);
    if (ids.empty()) return out;
    for (TokenId id : ids) {
      const double* row = params_.data() + static_cast<std::size_t>(id) * d;
      for (std::size_t k = 0; k < d; ++k) out[k] += row[k];
    }
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (std::size_t k = 0; k < d; ++k) out[k] *= inv;
    return out;
  }

  Vocabulary vocab_;
  EmojiLexicon lexicon_;
  ScorerHyper hyper_;
  std::vector<double> params_;  // E (V x d), W (d x d), b
};

inline BilinearScorer train_scorer(const std::vector<LabeledPair>& pairs,
                                   Vocabulary vocab, EmojiLexicon lexicon,
                                   ScorerHyper hyper,
                                   std::vector<double>* epoch_losses = nullptr) {
  std::size_t positives = 0;
  for (const auto& p : pairs) positives += p.label;
  if (pairs.empty() || positives == 0 || positives == pairs.size())
    throw SelectionError("train_scorer: need a balanced non-empty pair list");
  BilinearScorer scorer(std::move(vocab), std::move(lexicon), hyper);
  auto losses = scorer.train(pairs);
  if (epoch_losses) *epoch_losses = std::move(losses);
  return scorer;
}

// --- baseline scorers ---------------------------------------------------------

// Jaccard similarity of token-id sets.
class TokenOverlapScorer : public Scorer {
 public:
  TokenOverlapScorer(Vocabulary vocab, EmojiLexicon lexicon, EncodeOptions opts = {})
      : vocab_(std::move(vocab)), lexicon_(std::move(lexicon)), opts_(opts) {}

  double score(const std::string& question, const std::string& candidate) const override {
    const auto qa = token_set(question);
    const auto ca = token_set(candidate);
    if (qa.empty() && ca.empty()) return 1.0;
    std::size_t inter = 0;
    for (TokenId id : qa) inter += ca.count(id);
    const std::size_t uni = qa.size() + ca.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }

 private:
  std::set<TokenId> token_set(const std::string& text) const {
    std::set<TokenId> out;
    for (const auto& tok : tokenize_text(text, vocab_, lexicon_, opts_))
      out.insert(vocab_.id(tok));
    return out;
  }

  Vocabulary vocab_;
  EmojiLexicon lexicon_;
  EncodeOptions opts_;
};

// Cosine of tf-idf vectors; idf fitted on the training answers with
// idf(t) = ln((1+N)/(1+df(t))) + 1.
class TfidfScorer : public Scorer {
 public:
  TfidfScorer(Vocabulary vocab, EmojiLexicon lexicon, EncodeOptions opts = {})
      : vocab_(std::move(vocab)), lexicon_(std::move(lexicon)), opts_(opts) {}

  void fit(const std::vector<std::string>& documents) {
    df_.clear();
    n_docs_ = documents.size();
    for (const auto& doc : documents) {
      std::unordered_set<TokenId> seen;
      for (const auto& tok : tokenize_text(doc, vocab_, lexicon_, opts_))
        seen.insert(vocab_.id(tok));
      for (TokenId id : seen) df_[id] += 1;
    }
    fitted_ = true;
  }

  double idf(TokenId id) const {
    auto it = df_.find(id);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + df)) + 1.0;
  }

  double score(const std::string& question, const std::string& candidate) const override {
    if (!fitted_) throw SelectionError("tfidf_cosine: scorer used before fitting");
    const auto qv = vectorize(question);
    const auto cv = vectorize(candidate);
    double dot = 0.0, qn = 0.0, cn = 0.0;
    for (const auto& [id, w] : qv) {
      qn += w * w;
      auto it = cv.find(id);
      if (it != cv.end()) dot += w * it->second;
    }
    for (const auto& [id, w] : cv) cn += w * w;
    if (qn == 0.0 || cn == 0.0) return 0.0;
    return dot / (std::sqrt(qn) * std::sqrt(cn));
  }

 private:
  std::unordered_map<TokenId, double> vectorize(const std::string& text) const {
    std::unordered_map<TokenId, double> tf;
    for (const auto& tok : tokenize_text(text, vocab_, lexicon_, opts_))
      tf[vocab_.id(tok)] += 1.0;
    for (auto& [id, w] : tf) w *= idf(id);
    return tf;
  }

  Vocabulary vocab_;
  EmojiLexicon lexicon_;
  EncodeOptions opts_;
  std::unordered_map<TokenId, std::size_t> df_;
  std::size_t n_docs_ = 0;
  bool fitted_ = false;
};

// --- synthetic corpus ----------------------------------------------------------

namespace synth {

struct Topic {
  std::string emoji_alias;              // signature emoji
  std::vector<std::string> words;       // discriminative words
};

// Word topics select via text, emoji topics select via a shared glyph; both
// kinds pad with generic filler so surface "genericness" carries no signal.
inline const std::vector<Topic>& topics() {
  static const std::vector<Topic> kTopics = {
      {"pizza", {"pizza", "slice", "oven", "cheese"}},
      {"soccer_ball", {"match", "goal", "league", "striker"}},
      {"rocket", {"launch", "orbit", "booster", "countdown"}},
      {"laptop", {"keyboard", "screen", "battery", "charger"}},
      {"guitar", {"chord", "strings", "amplifier", "riff"}},
      {"dog_face", {"puppy", "leash", "kennel", "treats"}},
      {"hot_beverage", {"coffee", "espresso", "roast", "barista"}},
      {"airplane", {"flight", "boarding", "runway", "luggage"}},
      {"movie_camera", {"film", "trailer", "director", "premiere"}},
      {"balloon", {"party", "confetti", "invite", "cake"}},
      {"basketball", {"dunk", "court", "playoffs", "rebound"}},
      {"sushi", {"salmon", "wasabi", "chopsticks", "nori"}},
  };
  return kTopics;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> kFiller = {
      "hello", "please", "thanks", "update", "waiting", "soon",
      "okay",  "right",  "really", "maybe",  "today",   "again",
  };
  return kFiller;
}

}  // namespace synth

// Desk-scale stand-in for a customer-support QA dataset. A fraction
// emoji_rate of tuples carry a topical signature emoji in both question and
// answer (and otherwise only filler text); the rest share topical words
// between question and answer. Emoji are therefore the only discriminative
// signal for the emoji-bearing tuples.
inline std::vector<QATuple> generate_synthetic_corpus(std::size_t n_tuples,
                                                      double emoji_rate,
                                                      const EmojiLexicon& lexicon,
                                                      std::uint64_t seed) {
  if (!(emoji_rate >= 0.0 && emoji_rate <= 1.0))
    throw SelectionError("generate_synthetic_corpus: emoji_rate must lie in [0, 1]");
  auto rng = make_rng(seed, "synth");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& topics = synth::topics();
  const auto& filler = synth::filler_words();
  std::uniform_int_distribution<std::size_t> pick_topic(0, topics.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_filler(0, filler.size() - 1);

  std::vector<QATuple> out;
  out.reserve(n_tuples);
  for (std::size_t i = 0; i < n_tuples; ++i) {
    const auto& topic = topics[pick_topic(rng)];
    const bool with_emoji = unit(rng) < emoji_rate;
    QATuple t;
    t.id = i;
    if (with_emoji) {
      std::string glyph;
      const EmojiEntry* e = lexicon.find_alias(topic.emoji_alias);
      if (e && !e->codepoints.empty()) {
        glyph = utf8::encode(e->codepoints);
      } else {
        glyph = ":" + topic.emoji_alias + ":";  // custom or missing: textual form
      }
      // Question and answer use decoy topic words drawn independently, so the
      // shared glyph is the only reliable link between them.
      const auto& decoy_q = topics[pick_topic(rng)];
      const auto& decoy_a = topics[pick_topic(rng)];
      std::uniform_int_distribution<std::size_t> pick_qw(0, decoy_q.words.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_aw(0, decoy_a.words.size() - 1);
      t.question = filler[pick_filler(rng)] + " any news about " +
                   decoy_q.words[pick_qw(rng)] + " " + decoy_q.words[pick_qw(rng)] + " " +
                   glyph;
      t.answer = filler[pick_filler(rng)] + " the " + decoy_a.words[pick_aw(rng)] + " " +
                 decoy_a.words[pick_aw(rng)] + " is ready " + glyph;
    } else {
      std::uniform_int_distribution<std::size_t> pick_word(0, topic.words.size() - 1);
      const std::string& w1 = topic.words[pick_word(rng)];
      const std::string& w2 = topic.words[pick_word(rng)];
      t.question = filler[pick_filler(rng)] + " any news about " + w1 + " " + w2;
      t.answer = filler[pick_filler(rng)] + " the " + w1 + " " +
                 topic.words[pick_word(rng)] + " is ready";
    }
    out.push_back(std::move(t));
  }
  return out;
}

// --- JSON Lines dataset I/O ----------------------------------------------------

inline std::vector<QATuple> read_jsonl_dataset(std::istream& in) {
  std::vector<QATuple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SelectionError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    QATuple t;
    t.id = j.at("id").get<std::uint64_t>();
    t.question = j.at("question").get<std::string>();
    t.answer = j.at("answer").get<std::string>();
    if (t.question.find_first_not_of(" \t") == std::string::npos ||
        t.answer.find_first_not_of(" \t") == std::string::npos)
      throw SelectionError("dataset line " + std::to_string(line_no) +
                           ": empty question or answer");
    out.push_back(std::move(t));
  }
  return out;
}

inline void write_jsonl_dataset(std::ostream& out, const std::vector<QATuple>& tuples) {
  for (const auto& t : tuples) {
    nlohmann::json j{{"id", t.id}, {"question", t.question}, {"answer", t.answer}};
    out << j.dump() << "\n";
  }
}

}  // namespace emotok
