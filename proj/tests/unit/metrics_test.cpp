#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "dive/error.hpp"
#include "dive/metrics.hpp"
#include "dive/text.hpp"
#include "metrics_oracle.hpp"
#include "test_helpers.hpp"

using dive::GeneratedCorpus;
using dive::GeneratedInference;
using dive::make_inference;
using dive::ReferenceTable;
using dive::Relation;
using dive::UnigramModel;

namespace {

GeneratedCorpus corpus_of(std::initializer_list<const char*> texts) {
  GeneratedCorpus corpus;
  int i = 0;
  for (const char* t : texts) {
    corpus.push_back(make_inference("img" + std::to_string(i++),
                                    Relation::kBefore, t));
  }
  return corpus;
}

UnigramModel model_of(std::initializer_list<const char*> texts) {
  std::vector<std::vector<std::string>> seqs;
  for (const char* t : texts) seqs.push_back(dive::tokenize(t));
  return UnigramModel::from_token_sequences(seqs);
}

}  // namespace

TEST_CASE("mean length") {
  CHECK(dive::mean_length(corpus_of({"a b", "a b c d"})) == 3.0);
  CHECK(dive::mean_length(corpus_of({"one two three"})) == 3.0);
  CHECK(dive::mean_length(corpus_of(
            {"a b c d", "a b c d e", "a b c d e", "a b c d e",
             "a b c d e f"})) == 5.0);
  CHECK_THROWS_AS(dive::mean_length({}), dive::DataError);
}

TEST_CASE("dist_n pools distinct n-grams") {
  CHECK(dive::dist_n(corpus_of({"a b a b"}), 2) == 2);  // {a b, b a}
  CHECK(dive::dist_n({}, 2) == 0);
  CHECK(dive::dist_n(corpus_of({"x y z", "x y z"}), 2) ==
        dive::dist_n(corpus_of({"x y z"}), 2));
  CHECK(dive::dist_n(corpus_of({"a b"}), 3) == 0);  // too short
}

TEST_CASE("dist_n is monotone under corpus extension") {
  const auto small = corpus_of({"a b c", "c d"});
  const auto extended = corpus_of({"a b c", "c d", "e f g"});
  for (const std::size_t n : {2, 3}) {
    CHECK(dive::dist_n(extended, n) >= dive::dist_n(small, n));
  }
}

TEST_CASE("word entropy with add-one smoothing") {
  // counts {a:3, b:1}, N=4, V=2: p(a) = 4/7, p(b) = 2/7.
  const UnigramModel m = model_of({"a a a b"});
  const auto inf = make_inference("i", Relation::kBefore, "a b");
  const double expected =
      0.5 * (-std::log2(4.0 / 7.0) - std::log2(2.0 / 7.0));
  CHECK(dive::word_entropy(inf, m) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.3074).epsilon(1e-4));
}

TEST_CASE("oov-only sentence uses the smoothing floor") {
  const UnigramModel m = model_of({"a a a b"});
  const auto inf = make_inference("i", Relation::kBefore, "zz qq");
  CHECK(dive::word_entropy(inf, m) ==
        doctest::Approx(-std::log2(1.0 / 7.0)).epsilon(1e-12));
}

TEST_CASE("unique percentage follows the multiset reading") {
  CHECK(dive::unique_pct(corpus_of({"a", "b", "c"})) == 100.0);
  CHECK(dive::unique_pct(corpus_of({"x", "x", "y"})) ==
        doctest::Approx(100.0 / 3.0));
  CHECK(dive::unique_pct(corpus_of({"x", "x", "x"})) == 0.0);
}

TEST_CASE("novel percentage against a training set") {
  const std::unordered_set<std::string> train{"a", "b", "c"};
  CHECK(dive::novel_pct(corpus_of({"p", "q"}), {}) == 100.0);
  CHECK(dive::novel_pct(corpus_of({"a", "b"}), train) == 0.0);
  CHECK(dive::novel_pct(corpus_of({"a", "b", "p", "q", "r"}), train) == 60.0);
}

TEST_CASE("recall at k point cases") {
  dive::EmbeddingMatrix images(3);
  images.add_row("i0", std::vector<float>{1, 0, 0});
  images.add_row("i1", std::vector<float>{0, 1, 0});
  images.add_row("i2", std::vector<float>{0, 0, 1});
  dive::EmbeddingMatrix texts(3);
  texts.add_row("t0", std::vector<float>{1, 0, 0});
  const std::vector<std::size_t> truth{0};
  CHECK(dive::recall_at_k(texts, images, truth, 1) == 100.0);
  CHECK(dive::recall_at_k(texts, images, truth, 3) == 100.0);
  CHECK_THROWS_AS(dive::recall_at_k(texts, images, truth, 4), dive::DataError);
  dive::EmbeddingMatrix wrong(2);
  wrong.add_row("t0", std::vector<float>{1, 0});
  const std::vector<std::size_t> one_truth{0};
  CHECK_THROWS_AS(dive::recall_at_k(wrong, images, one_truth, 1),
                  dive::DataError);
}

TEST_CASE("recall is non-decreasing in k and total at pool size") {
  std::mt19937_64 rng(5);
  dive::EmbeddingMatrix images(4);
  dive::EmbeddingMatrix texts(4);
  std::vector<std::size_t> truth;
  for (int i = 0; i < 8; ++i) {
    std::vector<float> row(4), trow(4);
    for (auto& v : row) v = float(2.0 * dive::uniform_double(rng) - 1.0);
    for (auto& v : trow) v = float(2.0 * dive::uniform_double(rng) - 1.0);
    images.add_row("i" + std::to_string(i), row);
    texts.add_row("t" + std::to_string(i), trow);
    truth.push_back(std::size_t(i));
  }
  double prev = 0.0;
  for (const std::size_t k : {1, 2, 4, 8}) {
    const double r = dive::recall_at_k(texts, images, truth, k);
    CHECK(r >= prev);
    prev = r;
  }
  CHECK(dive::recall_at_k(texts, images, truth, 8) == 100.0);
}

TEST_CASE("bleu of identical hypothesis and reference is one") {
  const auto corpus = corpus_of({"the cat sat"});
  ReferenceTable refs;
  refs.add("img0", Relation::kBefore, std::vector<std::string>{"the cat sat"});
  CHECK(dive::bleu_n(corpus, refs, 2) == doctest::Approx(1.0));
}

TEST_CASE("bleu with no unigram overlap is zero") {
  const auto corpus = corpus_of({"x y z"});
  ReferenceTable refs;
  refs.add("img0", Relation::kBefore, std::vector<std::string>{"a b c"});
  CHECK(dive::bleu_n(corpus, refs, 2) == 0.0);
}

TEST_CASE("bleu hand-computed example") {
  // hyp "the cat sat" (3 tokens), ref "the cat sat down" (4 tokens):
  // p1 = 3/3, p2 = 2/2, BP = exp(1 - 4/3).
  const auto corpus = corpus_of({"the cat sat"});
  ReferenceTable refs;
  refs.add("img0", Relation::kBefore,
           std::vector<std::string>{"the cat sat down"});
  const double expected = std::exp(1.0 - 4.0 / 3.0) * 1.0;
  CHECK(dive::bleu_n(corpus, refs, 2) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bleu identity holds on a mixed corpus") {
  const auto corpus =
      corpus_of({"walk into the room", "pay for the meal", "sit down"});
  ReferenceTable refs;
  for (const auto& inf : corpus) {
    refs.add(inf.image_id, inf.relation,
             std::vector<std::string>{inf.text});
  }
  CHECK(dive::bleu_n(corpus, refs, 2) == doctest::Approx(1.0));
}

TEST_CASE("missing references are an error") {
  const auto corpus = corpus_of({"a b"});
  ReferenceTable refs;
  CHECK_THROWS_WITH_AS(dive::bleu_n(corpus, refs, 2),
                       doctest::Contains("missing references"),
                       dive::DataError);
}

TEST_CASE("cider of identical pair is maximal for the corpus") {
  const auto corpus = corpus_of({"a b c d e"});
  ReferenceTable refs;
  refs.add("img0", Relation::kBefore, std::vector<std::string>{"a b c d e"});
  // Cosine 1 per order, x10.
  CHECK(dive::cider(corpus, refs) == doctest::Approx(10.0));
}

TEST_CASE("cider of disjoint n-grams is zero") {
  const auto corpus = corpus_of({"a b c"});
  ReferenceTable refs;
  refs.add("img0", Relation::kBefore, std::vector<std::string>{"x y z"});
  CHECK(dive::cider(corpus, refs) == 0.0);
}

TEST_CASE("metrics match the naive oracles on random corpora") {
  std::mt19937_64 rng(31337);
  const char* vocab[8] = {"walk", "talk", "eat", "run", "sit", "go", "up",
                          "down"};
  for (int round = 0; round < 30; ++round) {
    const std::size_t n = 1 + dive::uniform_below(rng, 40);
    GeneratedCorpus corpus;
    ReferenceTable refs;
    std::vector<dive::oracle::Tokens> hyp_tokens;
    std::vector<std::vector<dive::oracle::Tokens>> ref_tokens;
    std::vector<std::vector<dive::oracle::Tokens>> documents;
    std::vector<std::string> normalized;

    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      const std::size_t len = 1 + dive::uniform_below(rng, 6);
      for (std::size_t w = 0; w < len; ++w) {
        if (w > 0) text += ' ';
        text += vocab[dive::uniform_below(rng, 8)];
      }
      corpus.push_back(
          make_inference("img" + std::to_string(i), Relation::kBefore, text));
      hyp_tokens.push_back(corpus.back().tokens);
      normalized.push_back(corpus.back().normalized);

      std::vector<std::string> rs;
      std::vector<dive::oracle::Tokens> rtoks;
      const std::size_t n_refs = 1 + dive::uniform_below(rng, 3);
      for (std::size_t r = 0; r < n_refs; ++r) {
        std::string ref;
        const std::size_t rlen = 1 + dive::uniform_below(rng, 6);
        for (std::size_t w = 0; w < rlen; ++w) {
          if (w > 0) ref += ' ';
          ref += vocab[dive::uniform_below(rng, 8)];
        }
        rs.push_back(ref);
        rtoks.push_back(dive::tokenize(ref));
      }
      refs.add("img" + std::to_string(i), Relation::kBefore, rs);
      ref_tokens.push_back(rtoks);
      documents.push_back(rtoks);
    }

    CHECK(dive::dist_n(corpus, 2) == dive::oracle::dist_n_naive(hyp_tokens, 2));
    CHECK(dive::dist_n(corpus, 3) == dive::oracle::dist_n_naive(hyp_tokens, 3));
    CHECK(dive::unique_pct(corpus) ==
          doctest::Approx(dive::oracle::unique_pct_naive(normalized))
              .epsilon(1e-12));
    const std::set<std::string> train{"walk", "talk up", "eat down"};
    CHECK(dive::novel_pct(corpus, {train.begin(), train.end()}) ==
          doctest::Approx(dive::oracle::novel_pct_naive(normalized, train))
              .epsilon(1e-12));

    const UnigramModel m = model_of({"walk talk eat", "go go up down walk"});
    std::map<std::string, long long> counts;
    for (const char* w : {"walk", "talk", "eat", "go", "go", "up", "down",
                          "walk"}) {
      ++counts[w];
    }
    for (const auto& inf : corpus) {
      CHECK(dive::word_entropy(inf, m) ==
            doctest::Approx(dive::oracle::word_entropy_naive(inf.tokens,
                                                             counts))
                .epsilon(1e-9));
    }

    CHECK(dive::bleu_n(corpus, refs, 2) ==
          doctest::Approx(dive::oracle::bleu2_naive(hyp_tokens, ref_tokens))
              .epsilon(1e-9));
    CHECK(dive::cider(corpus, refs) ==
          doctest::Approx(dive::oracle::cider_naive(hyp_tokens, ref_tokens,
                                                    documents))
              .epsilon(1e-9));
  }
}

TEST_CASE("entropy histogram bins on even centers") {
  // Entropies land in [k-1, k+1) bins around even k.
  GeneratedCorpus corpus;
  corpus.push_back(make_inference("a", Relation::kBefore, "w1"));
  corpus.push_back(make_inference("b", Relation::kBefore, "w2"));
  const UnigramModel m = model_of({"w1"});
  // One token seen (count 1), one unseen; N=1, V=1, denom=3.
  const double h_seen = -std::log2(2.0 / 3.0);   // ~0.585 -> bin 0
  const double h_oov = -std::log2(1.0 / 3.0);    // ~1.585 -> bin 2
  const auto hist = dive::entropy_histogram(corpus, m, 2.0);
  REQUIRE(hist.bins.size() == 2);
  CHECK(hist.bins[0].first == 0.0);
  CHECK(hist.bins[0].second == doctest::Approx(0.5));
  CHECK(hist.bins[1].first == 2.0);
  CHECK(hist.bins[1].second == doctest::Approx(0.5));
  CHECK(h_seen < 1.0);
  CHECK(h_oov >= 1.0);
}

TEST_CASE("identical entropies land in a single full bin") {
  GeneratedCorpus corpus;
  for (int i = 0; i < 7; ++i) {
    corpus.push_back(make_inference("i" + std::to_string(i),
                                    Relation::kBefore, "same words"));
  }
  const UnigramModel m = model_of({"same words said twice", "same again"});
  const auto hist = dive::entropy_histogram(corpus, m, 2.0);
  REQUIRE(hist.bins.size() == 1);
  CHECK(hist.bins[0].second == 1.0);
}

TEST_CASE("entropy histogram half-open bin rule") {
  // 19.0 belongs to [19, 21) around 20; 21.0 belongs to [21, 23) around 22.
  CHECK(2.0 * std::floor(19.0 / 2.0 + 0.5) == 20.0);
  CHECK(2.0 * std::floor(21.0 / 2.0 + 0.5) == 22.0);
  GeneratedCorpus corpus;
  corpus.push_back(make_inference("a", Relation::kBefore, "x"));
  const UnigramModel m = model_of({"x"});
  CHECK_THROWS_AS(dive::entropy_histogram({}, m, 2.0), dive::DataError);
}

TEST_CASE("evaluate_corpus assembles every field") {
  const auto corpus = corpus_of({"walk into the room", "sit on the chair"});
  ReferenceTable refs;
  for (const auto& inf : corpus) {
    refs.add(inf.image_id, inf.relation, std::vector<std::string>{inf.text});
  }
  const UnigramModel m = model_of({"walk into the room sit on the chair"});
  const auto report =
      dive::evaluate_corpus(corpus, refs, m, {"walk into the room"});
  CHECK(report.length_mean == 4.0);
  CHECK(report.yngve_mean == doctest::Approx(3.0 / 4.0));  // fallback trees
  CHECK(report.yngve_source == dive::YngveSource::kFallback);
  CHECK(report.dist2 == 6);
  CHECK(report.unique_pct == 100.0);
  CHECK(report.novel_pct == 50.0);
  CHECK(report.bleu2 == doctest::Approx(1.0));
  const std::string json = dive::to_json_string(report);
  CHECK(json.find("\"yngve_source\": \"fallback\"") != std::string::npos);
}

TEST_CASE("corpus loader validates parse leaves against tokens") {
  dive::testing::TempDir dir;
  dive::testing::write_file(
      dir.file("ok.jsonl"),
      R"x({"image_id":"i","relation":"before","text":"w1 w2 w3","parse":"(S (NP w1) (VP w2 w3))"})x"
      "\n");
  const auto corpus = dive::load_corpus_jsonl(dir.file("ok.jsonl"));
  REQUIRE(corpus.size() == 1);
  REQUIRE(corpus[0].parse.has_value());

  dive::testing::write_file(
      dir.file("bad.jsonl"),
      R"x({"image_id":"i","relation":"before","text":"w1 w2","parse":"(S w1)"})x"
      "\n");
  CHECK_THROWS_WITH_AS(dive::load_corpus_jsonl(dir.file("bad.jsonl")),
                       doctest::Contains("line 1"), dive::DataError);
}
