#include "dive/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "dive/error.hpp"
#include "dive/rng.hpp"

namespace dive {

double retrieval_accuracy(std::span<const ContrastiveBatchItem> items,
                          const ToyModelParams& params) {
  std::size_t eligible = 0;
  std::size_t hits = 0;
  for (const ContrastiveBatchItem& item : items) {
    if (!item.crl_enabled || item.images.size() < 2) continue;
    ++eligible;
    const Eigen::VectorXd v_p =
        params.image_proj * item.images[item.positive_index];
    const DecodeTrace trace = decode_text(item.tokens, v_p, params);
    const Eigen::VectorXd t_s = text_representation(trace, params);
    std::size_t best = 0;
    double best_sigma = -1.0;
    for (std::size_t i = 0; i < item.images.size(); ++i) {
      const double sigma =
          agreement(params.image_proj * item.images[i], t_s);
      if (sigma > best_sigma) {
        best_sigma = sigma;
        best = i;
      }
    }
    if (best == item.positive_index) ++hits;
  }
  if (eligible == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

TrainResult train_toy(const ToyDataset& data, const TrainConfig& config) {
  if (config.batch == 0) {
    throw DataError("batch size must be positive");
  }
  if (config.lambda < 0.0) {
    throw DataError("lambda must be non-negative");
  }
  const auto [graph, emb] = to_graph(data);

  TrainResult result;
  result.vocab = vocab_from_graph(graph);

  std::vector<ContrastiveBatchItem> items;
  for (std::size_t r = 0; r < config.sampling_rounds; ++r) {
    auto round = sample_contrastive_batch(graph, emb, result.vocab,
                                          derive_seed(config.seed, r),
                                          BatchOptions{config.h_size});
    items.insert(items.end(), std::make_move_iterator(round.begin()),
                 std::make_move_iterator(round.end()));
  }

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  {
    std::mt19937_64 split_rng(derive_seed(config.seed, 1001));
    fisher_yates_shuffle(order, split_rng);
  }
  const auto holdout_count = static_cast<std::size_t>(
      std::floor(config.holdout_fraction * static_cast<double>(items.size())));
  std::vector<ContrastiveBatchItem> holdout;
  std::vector<ContrastiveBatchItem> train;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < holdout_count ? holdout : train;
    dst.push_back(std::move(items[order[i]]));
  }
  result.train_items = train.size();
  result.holdout_items = holdout.size();
  if (train.empty()) {
    throw DataError("no training items after the holdout split");
  }

  ToyModelShapes shapes;
  shapes.vocab = result.vocab.size();
  shapes.d_e = config.d_e;
  shapes.d_h = config.d_h;
  shapes.d_r = config.d_r;
  shapes.d_img = static_cast<int>(emb.dim());
  result.params = ToyModelParams::random(
      shapes, derive_seed(config.seed, 1002), config.init_scale);
  result.initial_params = result.params;

  AdamWConfig opt;
  opt.lr = config.lr;
  opt.weight_decay = config.weight_decay;
  AdamWState state = AdamWState::init(result.params);

  const std::span<const ContrastiveBatchItem> eval_items =
      holdout.empty() ? std::span<const ContrastiveBatchItem>(train)
                      : std::span<const ContrastiveBatchItem>(holdout);

  std::mt19937_64 epoch_rng(derive_seed(config.seed, 1003));
  std::vector<std::size_t> train_order(train.size());
  for (std::size_t i = 0; i < train_order.size(); ++i) train_order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    fisher_yates_shuffle(train_order, epoch_rng);
    double l_org_sum = 0.0;
    double l_crl_sum = 0.0;
    std::size_t crl_items = 0;

    std::size_t cursor = 0;
    while (cursor < train_order.size()) {
      const std::size_t batch_end =
          std::min(cursor + config.batch, train_order.size());
      const auto batch_size = static_cast<double>(batch_end - cursor);
      Gradients accum = ToyModelParams::zeros(shapes);
      for (; cursor < batch_end; ++cursor) {
        const ContrastiveBatchItem& item = train[train_order[cursor]];
        LossBreakdown loss;
        Gradients g;
        try {
          g = backward(item, result.params, config.lambda, &loss);
        } catch (const NumericError& e) {
          throw NumericError("epoch " + std::to_string(epoch) + ", item '" +
                             item.text + "': " + e.what());
        }
        for (std::size_t t = 0; t < ToyModelParams::kTensorCount; ++t) {
          accum.tensor(t) += g.tensor(t);
        }
        l_org_sum += loss.l_org;
        if (item.crl_enabled && item.images.size() >= 2) {
          l_crl_sum += loss.l_crl;
          ++crl_items;
        }
      }
      for (std::size_t t = 0; t < ToyModelParams::kTensorCount; ++t) {
        accum.tensor(t) /= batch_size;
      }
      adamw_step(result.params, accum, state, opt);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_l_org = l_org_sum / static_cast<double>(train.size());
    stats.mean_l_crl =
        crl_items == 0 ? 0.0 : l_crl_sum / static_cast<double>(crl_items);
    stats.retrieval_acc = retrieval_accuracy(eval_items, result.params);
    if (!std::isfinite(stats.mean_l_org) || !std::isfinite(stats.mean_l_crl)) {
      throw NumericError("non-finite epoch-" + std::to_string(epoch) +
                         " loss (mean_l_org=" + std::to_string(stats.mean_l_org) +
                         ")");
    }
    result.trace.push_back(stats);
  }
  return result;
}

std::string trace_to_csv(std::span<const EpochStats> trace) {
  std::string out = "epoch,mean_l_org,mean_l_crl,retrieval_acc\n";
  char buf[160];
  for (const EpochStats& row : trace) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", row.epoch,
                  row.mean_l_org, row.mean_l_crl, row.retrieval_acc);
    out += buf;
  }
  return out;
}

void write_trace_csv(std::span<const EpochStats> trace,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << trace_to_csv(trace);
}

}  // namespace dive
