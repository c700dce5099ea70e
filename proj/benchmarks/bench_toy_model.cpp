#include <benchmark/benchmark.h>

#include <random>

#include "dive/rng.hpp"
#include "dive/toy_model.hpp"
#include "dive/trainer.hpp"

namespace {

dive::ContrastiveBatchItem make_item(std::uint64_t seed, int d_img) {
  std::mt19937_64 rng(seed);
  dive::ContrastiveBatchItem item;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd row(d_img);
    for (int d = 0; d < d_img; ++d) {
      row(d) = 2.0 * dive::uniform_double(rng) - 1.0;
    }
    item.images.push_back(row);
    item.image_ids.push_back("i");
  }
  item.positive_index = 1;
  item.tokens = {dive::ToyVocab::kBos, 3, 4, 5, 6, dive::ToyVocab::kEos};
  return item;
}

void BM_Backward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const dive::ToyModelShapes shapes{32, d, d, d, d};
  const auto params = dive::ToyModelParams::random(shapes, 3, 0.2);
  const auto item = make_item(5, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dive::backward(item, params, 0.5));
  }
}

void BM_TrainEpoch(benchmark::State& state) {
  const auto data = dive::make_synthetic_clusters({});
  dive::TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dive::train_toy(data, config));
  }
}

}  // namespace

BENCHMARK(BM_Backward)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK(BM_TrainEpoch);

BENCHMARK_MAIN();
