#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dive/embeddings.hpp"

namespace dive {

enum class Relation { kBefore = 0, kAfter = 1, kIntent = 2 };
inline constexpr std::array<Relation, 3> kAllRelations = {
    Relation::kBefore, Relation::kAfter, Relation::kIntent};

Relation relation_from_string(std::string_view s);  // throws DataError
std::string_view to_string(Relation r);

struct ImageRecord {
  std::string image_id;
  std::string event;
  std::string place;
  // Row in the companion EmbeddingMatrix; unset when the graph was built
  // without embeddings (filtering and batch sampling then refuse to run).
  std::optional<std::size_t> embedding_row;
};

struct CommonsenseDescription {
  int description_id = 0;
  std::string raw_text;         // first raw spelling seen for this node
  std::string normalized_text;  // identity key, see normalize_text()
};

// Edge endpoints are stored as indices into the graph's image/description
// tables; (image, relation, description) triples are unique.
struct InferenceEdge {
  std::size_t image = 0;
  Relation relation = Relation::kBefore;
  int description = 0;
};

// One graph JSONL line.
struct RawEdgeRecord {
  std::string image_id;
  std::string event;
  std::string place;
  Relation relation = Relation::kBefore;
  std::string description;
};

/// Immutable, fully indexed visual commonsense graph.
///
/// Canonical ordering makes serialization reproducible: images sorted by id,
/// description ids dense in lexicographic order of normalized text, edges
/// sorted by (image id, relation, description id) with duplicates collapsed.
class VisualCommonsenseGraph {
 public:
  VisualCommonsenseGraph() = default;

  // `extra_images` lets callers carry over image records that have lost all
  // edges (filtering never deletes image records).
  static VisualCommonsenseGraph build(
      const std::vector<RawEdgeRecord>& records,
      const EmbeddingMatrix* embeddings = nullptr,
      const std::vector<ImageRecord>* extra_images = nullptr);

  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<CommonsenseDescription>& descriptions() const {
    return descriptions_;
  }
  const std::vector<InferenceEdge>& edges() const { return edges_; }

  // 𝒢(C_j): distinct images of a description, ascending by image id.
  const std::vector<std::size_t>& images_of_description(int desc) const {
    return images_by_description_[static_cast<std::size_t>(desc)];
  }
  const std::vector<std::size_t>& edges_of_image(std::size_t image) const {
    return edges_by_image_[image];
  }

  std::optional<std::size_t> image_index(std::string_view image_id) const;
  std::optional<int> description_id(std::string_view normalized) const;

  RawEdgeRecord edge_record(const InferenceEdge& e) const;

 private:
  std::vector<ImageRecord> images_;
  std::vector<CommonsenseDescription> descriptions_;
  std::vector<InferenceEdge> edges_;
  std::vector<std::vector<std::size_t>> images_by_description_;
  std::vector<std::vector<std::size_t>> edges_by_image_;
  std::unordered_map<std::string, std::size_t> image_index_;
  std::unordered_map<std::string, int> description_index_;
};

// Reads one {"image_id", "event", "place", "relation", "description"} object
// per line. Errors carry 1-based line numbers. The overload with embeddings
// requires every image to be covered and records its row.
VisualCommonsenseGraph ingest_jsonl(const std::filesystem::path& path,
                                    const EmbeddingMatrix& embeddings);
VisualCommonsenseGraph ingest_jsonl(const std::filesystem::path& path);

// Canonical serialization: one edge per line in canonical order, description
// field holding the normalized text, UTF-8, LF-terminated. Ingesting the
// output reproduces a graph whose serialization is byte-identical.
void write_jsonl(const VisualCommonsenseGraph& g,
                 const std::filesystem::path& path);
std::string to_jsonl(const VisualCommonsenseGraph& g);

struct DescriptionFrequency {
  std::string text;
  int description_id = 0;
  std::size_t image_count = 0;  // |𝒢(C_j)|
};

struct StatsReport {
  std::size_t images = 0;
  std::size_t edges = 0;
  std::array<std::size_t, 3> edges_by_relation = {0, 0, 0};
  std::size_t distinct_descriptions = 0;
  std::vector<DescriptionFrequency> top_descriptions;
};

StatsReport graph_stats(const VisualCommonsenseGraph& g,
                        std::size_t top_k = 10);
std::string to_json_string(const StatsReport& report);

}  // namespace dive
