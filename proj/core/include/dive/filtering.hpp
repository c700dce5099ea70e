#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dive/embeddings.hpp"
#include "dive/graph.hpp"

namespace dive {

/// Semantic concentration of a description's related images: mean pairwise
/// cosine over 𝒢(C_j) × 𝒢(C_j), self-pairs included, divided by |𝒢(C_j)|².
struct ConcentrationScore {
  int description_id = 0;
  double s_value = 0.0;     // in [-1, 1]; 1.0 for singletons
  std::size_t freq = 0;     // |𝒢(C_j)|
};

struct RankedImage {
  std::string image_id;
  double avg_similarity = 0.0;  // mean cosine to the other related images
};

struct FilterDecision {
  int description_id = 0;
  std::string description;
  double s_value = 0.0;
  std::size_t freq = 0;
  double p_f = 0.0;                           // in [0, 1]
  std::size_t remove_count = 0;               // ⌊p_f · freq⌋
  std::vector<std::string> removed_image_ids; // lowest average similarity first
};

struct RemovedEdge {
  std::string image_id;
  Relation relation = Relation::kBefore;
  std::string description;
};

struct FilterReport {
  double threshold = 0.0;
  std::size_t edges_before = 0;
  std::size_t edges_after = 0;
  std::vector<FilterDecision> decisions;   // description_id order
  std::vector<RemovedEdge> removed_edges;  // canonical edge order
};

struct SweepEntry {
  double threshold = 0.0;
  std::size_t edges_before = 0;
  std::size_t edges_after = 0;
  std::size_t removed_edges = 0;
  std::size_t descriptions_dropped = 0;  // left with zero related images
};

ConcentrationScore semantic_concentration(int description_id,
                                          const VisualCommonsenseGraph& g,
                                          const EmbeddingMatrix& emb);

// 1 - sqrt(t * s / freq), clamped to [0, 1]; a non-positive radicand means
// maximal dispersion and yields 1. Requires t > 0.
double filtering_probability(const ConcentrationScore& s, double t);

// Ascending by average cosine to the other related images (1.0 when the
// description has a single image), ties by image id ascending.
std::vector<RankedImage> rank_images_by_avg_similarity(
    int description_id, const VisualCommonsenseGraph& g,
    const EmbeddingMatrix& emb);

// Removes, per description, all edges touching its ⌊p_f·freq⌋ least similar
// related images. Image records survive even when all their edges go.
// Per-description work runs on up to DIVE_THREADS workers; the result is
// schedule-independent.
std::pair<VisualCommonsenseGraph, FilterReport> apply_filter(
    const VisualCommonsenseGraph& g, const EmbeddingMatrix& emb, double t);

std::vector<SweepEntry> threshold_sweep(const VisualCommonsenseGraph& g,
                                        const EmbeddingMatrix& emb,
                                        std::span<const double> thresholds);

std::string to_json_string(const FilterReport& report);
std::string to_json_string(const std::vector<SweepEntry>& sweep);

}  // namespace dive
