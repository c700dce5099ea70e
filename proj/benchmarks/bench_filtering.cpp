#include <benchmark/benchmark.h>

#include <random>

#include "dive/filtering.hpp"
#include "dive/graph.hpp"
#include "dive/rng.hpp"

namespace {

struct Fixture {
  std::vector<dive::RawEdgeRecord> records;
  dive::EmbeddingMatrix emb{64};
};

// `images` images, images/4 descriptions, ~4 edges per image.
Fixture make_graph(std::size_t images) {
  std::mt19937_64 rng(7);
  Fixture f;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < images; ++i) {
    std::vector<float> row(64);
    for (auto& v : row) {
      v = static_cast<float>(2.0 * dive::uniform_double(rng) - 1.0);
    }
    std::string id = "img" + std::to_string(100000 + i);
    f.emb.add_row(id, row);
    ids.push_back(std::move(id));
  }
  const std::size_t descs = std::max<std::size_t>(images / 4, 1);
  for (std::size_t e = 0; e < images * 4; ++e) {
    f.records.push_back(dive::RawEdgeRecord{
        ids[dive::uniform_below(rng, ids.size())], "e", "p",
        dive::Relation::kBefore,
        "desc " + std::to_string(dive::uniform_below(rng, descs))});
  }
  return f;
}

void BM_ApplyFilter(benchmark::State& state) {
  const Fixture f = make_graph(static_cast<std::size_t>(state.range(0)));
  const auto g = dive::VisualCommonsenseGraph::build(f.records, &f.emb);
  for (auto _ : state) {
    auto result = dive::apply_filter(g, f.emb, 10.0);
    benchmark::DoNotOptimize(result.second.edges_after);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(g.edges().size()));
}

void BM_Ingest(benchmark::State& state) {
  const Fixture f = make_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto g = dive::VisualCommonsenseGraph::build(f.records, &f.emb);
    benchmark::DoNotOptimize(g.edges().size());
  }
}

}  // namespace

BENCHMARK(BM_ApplyFilter)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_Ingest)->Arg(256)->Arg(1024);
