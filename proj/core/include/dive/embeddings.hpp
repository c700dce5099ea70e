#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dive {

/// Dense image embeddings, one binary32 row per image id. Stands in for the
/// output of an external image encoder; this toolkit never runs one.
///
/// On-disk format: magic "DIVEEMB1", u32-LE row count, u32-LE dimension,
/// then rows*dim binary32-LE values row-major. Row ids live in a sidecar
/// `<file>.ids.jsonl`, one {"image_id": ...} object per row in row order.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

  // Validates the row: finite entries, nonzero Euclidean norm, unique id.
  void add_row(std::string image_id, std::span<const float> values);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  const std::string& row_id(std::size_t i) const { return row_ids_[i]; }
  std::optional<std::size_t> row_of(const std::string& image_id) const;

  static EmbeddingMatrix load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

 private:
  std::size_t dim_;
  std::vector<float> values_;
  std::vector<std::string> row_ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Cosine similarity accumulated in binary64 regardless of storage width.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace dive
