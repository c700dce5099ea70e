#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dive/embeddings.hpp"
#include "dive/graph.hpp"
#include "dive/toy_model.hpp"

namespace dive {

struct BatchOptions {
  std::size_t h_size = 2;  // |H|: anchor plus sampled similar images
};

/// Builds one item per anchor edge, in canonical edge order. H is the
/// anchor image plus images sampled uniformly without replacement from
/// 𝒢(C_j) \ {anchor}. The positive pair is drawn uniformly from the
/// (image, description) candidates — enumerated in (image id, description
/// id) order — where the description relates to exactly one member of H.
/// Anchors whose description has a single related image, and sets with no
/// uniquely related description, yield items flagged LM-only (the LM text
/// is then the anchor's own description).
std::vector<ContrastiveBatchItem> sample_contrastive_batch(
    const VisualCommonsenseGraph& g, const EmbeddingMatrix& emb,
    const ToyVocab& vocab, std::uint64_t rng_seed,
    const BatchOptions& options = {});

/// One toy-dataset image: collapsed feature row, its private descriptions,
/// and the description shared with its cluster.
struct ToyImage {
  std::string image_id;
  Eigen::VectorXd features;
  std::vector<std::string> descriptions;
  std::string shared_description;
};

using ToyDataset = std::vector<ToyImage>;

// {"image_id", "features": [[...], ...], "descriptions": [...],
//  "shared_description": ...} per line; multiple feature rows are averaged
// into one on load.
ToyDataset load_toy_dataset_jsonl(const std::filesystem::path& path);
void write_toy_dataset_jsonl(const ToyDataset& data,
                             const std::filesystem::path& path);

// Graph view of a toy dataset: every description becomes an intent edge and
// features land in a binary32 EmbeddingMatrix.
std::pair<VisualCommonsenseGraph, EmbeddingMatrix> to_graph(
    const ToyDataset& data);

ToyVocab vocab_from_graph(const VisualCommonsenseGraph& g);

struct SyntheticClustersConfig {
  std::size_t clusters = 8;
  std::size_t images_per_cluster = 4;
  std::size_t dim = 12;
  double offset_scale = 1.0;  // within-cluster spread
  std::uint64_t seed = 0;
};

// Clusters of images around random unit directions; each cluster shares one
// generic description and every image carries one unique marker description.
ToyDataset make_synthetic_clusters(const SyntheticClustersConfig& config);

}  // namespace dive
