#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "dive/graph.hpp"

namespace dive {

enum class SubsetKind { kUnique, kNovel };

std::string_view to_string(SubsetKind k);

struct SubsetSpec {
  SubsetKind kind = SubsetKind::kUnique;
  std::size_t min_descriptions_per_image = 5;  // must be >= 1
};

struct SubsetReport {
  SubsetKind kind = SubsetKind::kUnique;
  std::size_t images_kept = 0;
  std::size_t edges_kept = 0;
  // Images that still had edges after the description-level filter but fewer
  // distinct descriptions than the minimum.
  std::size_t images_dropped_by_threshold = 0;
};

// Keeps edges whose description occurs on exactly one edge of `val`, then
// drops images left with fewer than min distinct descriptions.
std::pair<VisualCommonsenseGraph, SubsetReport> build_unique_subset(
    const VisualCommonsenseGraph& val, const SubsetSpec& spec);

// Keeps edges whose normalized description never occurs in `train`, then
// applies the same image drop. Both graphs must use the same normalization,
// which ingest guarantees.
std::pair<VisualCommonsenseGraph, SubsetReport> build_novel_subset(
    const VisualCommonsenseGraph& val, const VisualCommonsenseGraph& train,
    const SubsetSpec& spec);

std::string to_json_string(const SubsetReport& report);

}  // namespace dive
