#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dive/contrastive.hpp"
#include "dive/optimizer.hpp"
#include "dive/toy_model.hpp"

namespace dive {

struct TrainConfig {
  double lambda = 0.5;
  double lr = 3e-3;
  std::size_t epochs = 0;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;  // items reserved for the retrieval trace
  std::size_t sampling_rounds = 4;
  std::size_t h_size = 2;
  int d_e = 8;
  int d_h = 8;
  int d_r = 8;
  double init_scale = 0.2;
  double weight_decay = 0.01;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_l_org = 0.0;
  double mean_l_crl = 0.0;   // over contrastive-capable items
  double retrieval_acc = 0.0;
};

struct TrainResult {
  ToyModelParams params;
  ToyModelParams initial_params;
  ToyVocab vocab;
  std::vector<EpochStats> trace;
  std::size_t train_items = 0;
  std::size_t holdout_items = 0;
};

// Fraction of contrastive items whose positive image wins the agreement
// argmax over H; LM-only items are excluded from the denominator. Returns 0
// when no item is eligible.
double retrieval_accuracy(std::span<const ContrastiveBatchItem> items,
                          const ToyModelParams& params);

/// Deterministic training loop on a toy dataset: items are sampled in
/// `sampling_rounds` seeded passes, split into train/holdout, and optimized
/// with AdamW on mean batch gradients. The per-epoch trace reports mean
/// losses over the training pass and retrieval accuracy on the holdout
/// split (on the training items when the holdout is empty). Identical
/// seeds and inputs give bit-identical traces.
TrainResult train_toy(const ToyDataset& data, const TrainConfig& config);

// CSV trace: header epoch,mean_l_org,mean_l_crl,retrieval_acc.
void write_trace_csv(std::span<const EpochStats> trace,
                     const std::filesystem::path& path);
std::string trace_to_csv(std::span<const EpochStats> trace);

}  // namespace dive
