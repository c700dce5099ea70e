#include <benchmark/benchmark.h>

#include <random>

#include "dive/metrics.hpp"
#include "dive/rng.hpp"

namespace {

struct Corpus {
  dive::GeneratedCorpus corpus;
  dive::ReferenceTable refs;
};

Corpus make_corpus(std::size_t n) {
  std::mt19937_64 rng(11);
  std::vector<std::string> vocab;
  for (int i = 0; i < 200; ++i) vocab.push_back("w" + std::to_string(i));
  Corpus out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const std::size_t len = 3 + dive::uniform_below(rng, 6);
    for (std::size_t w = 0; w < len; ++w) {
      if (w > 0) text += ' ';
      text += vocab[dive::uniform_below(rng, vocab.size())];
    }
    out.corpus.push_back(dive::make_inference("img" + std::to_string(i),
                                              dive::Relation::kBefore, text));
    std::vector<std::string> rs;
    for (int r = 0; r < 3; ++r) {
      std::string ref;
      for (std::size_t w = 0; w < len; ++w) {
        if (w > 0) ref += ' ';
        ref += vocab[dive::uniform_below(rng, vocab.size())];
      }
      rs.push_back(ref);
    }
    out.refs.add("img" + std::to_string(i), dive::Relation::kBefore, rs);
  }
  return out;
}

void BM_Cider(benchmark::State& state) {
  const Corpus c = make_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dive::cider(c.corpus, c.refs));
  }
}

void BM_Bleu2(benchmark::State& state) {
  const Corpus c = make_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dive::bleu_n(c.corpus, c.refs, 2));
  }
}

void BM_DistN(benchmark::State& state) {
  const Corpus c = make_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dive::dist_n(c.corpus, 3));
  }
}

}  // namespace

BENCHMARK(BM_Cider)->Arg(100)->Arg(1000);
BENCHMARK(BM_Bleu2)->Arg(100)->Arg(1000);
BENCHMARK(BM_DistN)->Arg(1000)->Arg(10000);
