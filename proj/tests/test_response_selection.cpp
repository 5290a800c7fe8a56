#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "emotok/response_selection.hpp"
#include "test_support.hpp"

using namespace emotok;
using emotok::testing::fixture_lexicon;
using emotok::testing::toy_vocab;

namespace {

std::vector<QATuple> numbered_tuples(std::size_t n) {
  std::vector<QATuple> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"question " + std::to_string(i), "answer " + std::to_string(i), i});
  return out;
}

struct ConstScorer : Scorer {
  double score(const std::string&, const std::string&) const override { return 0.5; }
};

// ranks positives first: recognizes "answer K" matching "question K"
struct OracleScorer : Scorer {
  double score(const std::string& q, const std::string& c) const override {
    return q.substr(9) == c.substr(7) ? 1.0 : 0.0;
  }
};

}  // namespace

TEST_CASE("split_dataset") {
  auto tuples = numbered_tuples(2000);

  auto [train, test] = split_dataset(tuples, 0.7, 1);
  CHECK(train.size() == 1400);
  CHECK(test.size() == 600);

  SUBCASE("partitions are disjoint and cover the input") {
    std::set<std::uint64_t> ids;
    for (const auto& t : train) ids.insert(t.id);
    for (const auto& t : test) ids.insert(t.id);
    CHECK(ids.size() == 2000);
  }

  SUBCASE("small input arithmetic") {
    auto [tr, te] = split_dataset(numbered_tuples(10), 0.7, 1);
    CHECK(tr.size() == 7);
    CHECK(te.size() == 3);
  }

  SUBCASE("same seed twice gives identical splits") {
    auto [tr2, te2] = split_dataset(tuples, 0.7, 1);
    REQUIRE(tr2.size() == train.size());
    for (std::size_t i = 0; i < train.size(); ++i) CHECK(tr2[i].id == train[i].id);
  }

  SUBCASE("too few tuples") {
    CHECK_THROWS_AS(split_dataset(numbered_tuples(9), 0.7, 1), SelectionError);
  }
}

TEST_CASE("build_train_pairs") {
  auto train = numbered_tuples(3);
  auto pairs = build_train_pairs(train, 7);

  CHECK(pairs.size() == 6);
  std::size_t positives = 0;
  for (const auto& p : pairs) positives += p.label;
  CHECK(positives == 3);

  SUBCASE("negative is never the tuple's own answer") {
    for (std::size_t i = 0; i < 100; ++i) {
      auto ps = build_train_pairs(numbered_tuples(5), i);
      for (std::size_t k = 0; k < ps.size(); k += 2)
        CHECK(ps[k].response != ps[k + 1].response);
    }
  }

  SUBCASE("determinism") {
    auto again = build_train_pairs(train, 7);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      CHECK(pairs[i].response == again[i].response);
      CHECK(pairs[i].label == again[i].label);
    }
  }

  SUBCASE("needs two tuples") {
    CHECK_THROWS_AS(build_train_pairs(numbered_tuples(1), 0), SelectionError);
  }
}

TEST_CASE("build_eval_sets") {
  auto tuples = numbered_tuples(200);
  auto sets = build_eval_sets(tuples, tuples, 100, 3);

  CHECK(sets.size() == 200);
  for (const auto& s : sets) {
    CHECK(s.candidates.size() == 100);
    CHECK(s.positive_index < 100);
  }

  SUBCASE("positive is recorded correctly and negatives exclude it") {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const auto& s = sets[i];
      // positive candidate is the matching answer
      CHECK(s.candidates[s.positive_index] == "answer " + s.question.substr(9));
      // without-replacement sampling: all candidates distinct
      std::set<std::string> uniq(s.candidates.begin(), s.candidates.end());
      CHECK(uniq.size() == s.candidates.size());
    }
  }

  SUBCASE("minimal n") {
    auto small = build_eval_sets(tuples, tuples, 2, 3);
    for (const auto& s : small) CHECK(s.candidates.size() == 2);
  }

  SUBCASE("pool too small names n") {
    try {
      build_eval_sets(tuples, numbered_tuples(5), 100, 3);
      FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
      CHECK(std::string(e.what()).find("100") != std::string::npos);
    }
  }
}

TEST_CASE("rank_of_positive") {
  CHECK(rank_of_positive({0.9, 0.1, 0.2}, 0) == 1);
  CHECK(rank_of_positive({0.5, 0.5, 0.5, 0.5}, 1) == 4);  // pessimistic ties
  CHECK(rank_of_positive({0.2, 0.9, 0.5}, 2) == 2);
  CHECK_THROWS_AS(rank_of_positive({1.0}, 0), SelectionError);
  CHECK_THROWS_AS(
      rank_of_positive({0.1, std::numeric_limits<double>::quiet_NaN()}, 0),
      SelectionError);

  SUBCASE("matches a brute-force sort with pessimistic ties") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> nd(2, 30);
    std::uniform_int_distribution<int> coarse(0, 1);
    for (int iter = 0; iter < 2000; ++iter) {
      const int n = nd(rng);
      std::vector<double> scores(n);
      // coarse grid sometimes, to force ties
      for (auto& s : scores) s = coarse(rng) ? std::round(u(rng) * 4) / 4 : u(rng);
      std::uniform_int_distribution<int> pd(0, n - 1);
      const int pos = pd(rng);
      // oracle: stable sort descending, positive placed after equals
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      std::size_t oracle = 1;
      for (int j = 0; j < n; ++j)
        if (j != pos && scores[j] >= scores[pos]) ++oracle;
      CHECK(rank_of_positive(scores, pos) == oracle);
    }
  }

  SUBCASE("monotone invariance") {
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int iter = 0; iter < 500; ++iter) {
      std::vector<double> scores(10);
      for (auto& s : scores) s = u(rng);
      std::vector<double> mapped(10);
      for (int i = 0; i < 10; ++i) mapped[i] = std::tanh(scores[i]) * 3 + 5;
      for (std::size_t pos = 0; pos < 10; ++pos)
        CHECK(rank_of_positive(scores, pos) == rank_of_positive(mapped, pos));
    }
  }
}

TEST_CASE("evaluate") {
  auto tuples = numbered_tuples(100);
  auto sets = build_eval_sets(tuples, tuples, 10, 3);

  SUBCASE("perfect scorer") {
    EvalReport report = evaluate(OracleScorer{}, sets);
    CHECK(report.accuracy_1_of_n == 1.0);
    CHECK(report.mean_rank == 1.0);
  }

  SUBCASE("constant scorer gives rank n everywhere") {
    EvalReport report = evaluate(ConstScorer{}, sets);
    CHECK(report.accuracy_1_of_n == 0.0);
    CHECK(report.mean_rank == 10.0);
  }

  SUBCASE("permutation invariance") {
    std::mt19937_64 rng(5);
    auto shuffled = sets;
    for (auto& s : shuffled) {
      std::vector<std::size_t> order(s.candidates.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<std::string> cs(s.candidates.size());
      std::size_t new_pos = 0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        cs[k] = s.candidates[order[k]];
        if (order[k] == s.positive_index) new_pos = k;
      }
      s.candidates = std::move(cs);
      s.positive_index = new_pos;
    }
    EvalReport a = evaluate(OracleScorer{}, sets);
    EvalReport b = evaluate(OracleScorer{}, shuffled);
    CHECK(a.ranks == b.ranks);
  }

  SUBCASE("mixed n is an error") {
    auto bad = sets;
    bad[1].candidates.pop_back();
    CHECK_THROWS_AS(evaluate(ConstScorer{}, bad), SelectionError);
  }
}

TEST_CASE("baseline scorers") {
  const EmojiLexicon& lex = fixture_lexicon();
  const Vocabulary& vocab = toy_vocab();

  SUBCASE("token overlap jaccard") {
    TokenOverlapScorer scorer(vocab, lex);
    CHECK(scorer.score("hello please", "please hello") == 1.0);
    CHECK(scorer.score("hello", "update") == 0.0);
    // half overlap: {hello, please} vs {hello, update} -> 1/3
    CHECK(scorer.score("hello please", "hello update") == doctest::Approx(1.0 / 3));
  }

  SUBCASE("tfidf idf formula on a 3-document toy corpus") {
    TfidfScorer scorer(vocab, lex);
    scorer.fit({"hello update", "hello soon", "hello please"});
    // "hello" in all 3 docs: idf = ln(4/4) + 1 = 1
    CHECK(scorer.idf(vocab.id("hello")) == doctest::Approx(1.0));
    // "update" in 1 doc: idf = ln(4/2) + 1
    CHECK(scorer.idf(vocab.id("update")) == doctest::Approx(std::log(2.0) + 1.0));
    // unseen term: idf = ln(4/1) + 1
    CHECK(scorer.idf(vocab.id("pizza")) == doctest::Approx(std::log(4.0) + 1.0));
  }

  SUBCASE("tfidf before fit is an error") {
    TfidfScorer scorer(vocab, lex);
    CHECK_THROWS_AS(scorer.score("hello", "hello"), SelectionError);
  }

  SUBCASE("tfidf cosine of identical texts is 1") {
    TfidfScorer scorer(vocab, lex);
    scorer.fit({"hello update", "please soon"});
    CHECK(scorer.score("hello update", "hello update") == doctest::Approx(1.0));
  }
}

TEST_CASE("bilinear scorer") {
  const EmojiLexicon& lex = fixture_lexicon();
  Vocabulary vocab = extend_vocab(toy_vocab(), lex);

  SUBCASE("zero learning rate leaves parameters unchanged") {
    ScorerHyper hyper;
    hyper.dim = 8;
    hyper.epochs = 2;
    hyper.adam.learning_rate = 0.0;
    auto tuples = numbered_tuples(20);
    // numbered tuples tokenize fine ("question"/"answer" are [UNK], digits split)
    auto pairs = build_train_pairs(tuples, 3);
    BilinearScorer scorer(vocab, lex, hyper);
    const auto before = scorer.params();
    scorer.train(pairs);
    CHECK(scorer.params() == before);
  }

  SUBCASE("gradient matches central finite differences") {
    ScorerHyper hyper;
    hyper.dim = 6;
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int point = 0; point < 10; ++point) {
      hyper.seed = point;
      BilinearScorer scorer(vocab, lex, hyper);
      for (auto& p : scorer.params()) p = u(rng);
      auto ep = scorer.encode("hello please \xF0\x9F\x8D\x95", "the pizza is ready",
                              point % 2);
      std::vector<double> grad(scorer.params().size(), 0.0);
      scorer.loss_grad(ep, grad);

      const double h = 1e-5;
      std::mt19937_64 pick_rng(point + 100);
      std::uniform_int_distribution<std::size_t> pick(0, scorer.params().size() - 1);
      auto loss_at = [&](BilinearScorer& s) {
        std::vector<double> dummy(s.params().size(), 0.0);
        return s.loss_grad(ep, dummy);
      };
      for (int k = 0; k < 25; ++k) {
        const std::size_t i = pick(pick_rng);
        BilinearScorer plus = scorer, minus = scorer;
        plus.params()[i] += h;
        minus.params()[i] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
        CHECK(std::abs(fd - grad[i]) / denom < 1e-4);
      }
    }
  }

  SUBCASE("unbalanced pairs rejected") {
    std::vector<LabeledPair> pairs = {{"q", "a", 1}, {"q", "b", 1}};
    CHECK_THROWS_AS(train_scorer(pairs, vocab, lex, ScorerHyper{}), SelectionError);
  }
}

TEST_CASE("synthetic corpus generator") {
  const EmojiLexicon& lex = fixture_lexicon();

  SUBCASE("emoji_rate 0 produces no emoji") {
    auto tuples = generate_synthetic_corpus(100, 0.0, lex, 1);
    CHECK(tuples.size() == 100);
    for (const auto& t : tuples) {
      for (const auto& span : segment(lex, t.question + " " + t.answer))
        CHECK(span.kind != SpanKind::Emoji);
    }
  }

  SUBCASE("emoji_rate 1 puts an emoji in every tuple") {
    auto tuples = generate_synthetic_corpus(100, 1.0, lex, 1);
    for (const auto& t : tuples) {
      bool q_has = false, a_has = false;
      for (const auto& span : segment(lex, t.question))
        q_has = q_has || span.kind == SpanKind::Emoji;
      for (const auto& span : segment(lex, t.answer))
        a_has = a_has || span.kind == SpanKind::Emoji;
      CHECK(q_has);
      CHECK(a_has);
    }
  }

  SUBCASE("deterministic per seed") {
    auto a = generate_synthetic_corpus(50, 0.5, lex, 9);
    auto b = generate_synthetic_corpus(50, 0.5, lex, 9);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].question == b[i].question);
      CHECK(a[i].answer == b[i].answer);
    }
  }
}

TEST_CASE("jsonl dataset round-trip") {
  auto tuples = generate_synthetic_corpus(20, 0.5, fixture_lexicon(), 4);
  std::stringstream ss;
  write_jsonl_dataset(ss, tuples);
  auto back = read_jsonl_dataset(ss);
  REQUIRE(back.size() == tuples.size());
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    CHECK(back[i].id == tuples[i].id);
    CHECK(back[i].question == tuples[i].question);
    CHECK(back[i].answer == tuples[i].answer);
  }

  SUBCASE("malformed line reports its number") {
    std::stringstream bad("{\"id\":1,\"question\":\"q\",\"answer\":\"a\"}\nnot json\n");
    try {
      read_jsonl_dataset(bad);
      FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
}
