#include "dive/subsets.hpp"

#include <set>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "dive/error.hpp"

namespace dive {
namespace {

// Shared second step: drop images whose surviving distinct-description count
// is below the threshold, then rebuild.
std::pair<VisualCommonsenseGraph, SubsetReport> finish_subset(
    const VisualCommonsenseGraph& val,
    const std::vector<InferenceEdge>& kept_edges, const SubsetSpec& spec) {
  if (spec.min_descriptions_per_image < 1) {
    throw DataError("min_descriptions_per_image must be >= 1");
  }
  std::vector<std::set<int>> descs_per_image(val.images().size());
  for (const InferenceEdge& e : kept_edges) {
    descs_per_image[e.image].insert(e.description);
  }

  SubsetReport report;
  report.kind = spec.kind;
  std::vector<bool> image_kept(val.images().size(), false);
  for (std::size_t i = 0; i < val.images().size(); ++i) {
    const std::size_t count = descs_per_image[i].size();
    if (count >= spec.min_descriptions_per_image) {
      image_kept[i] = true;
    } else if (count > 0) {
      ++report.images_dropped_by_threshold;
    }
  }

  std::vector<RawEdgeRecord> records;
  records.reserve(kept_edges.size());
  for (const InferenceEdge& e : kept_edges) {
    if (image_kept[e.image]) {
      records.push_back(val.edge_record(e));
    }
  }
  VisualCommonsenseGraph subset = VisualCommonsenseGraph::build(records);
  report.images_kept = subset.images().size();
  report.edges_kept = subset.edges().size();
  return {std::move(subset), report};
}

}  // namespace

std::string_view to_string(SubsetKind k) {
  return k == SubsetKind::kUnique ? "unique" : "novel";
}

std::pair<VisualCommonsenseGraph, SubsetReport> build_unique_subset(
    const VisualCommonsenseGraph& val, const SubsetSpec& spec) {
  // Edge-level frequency: a description is unique when it labels exactly one
  // edge of the original validation graph.
  std::vector<std::size_t> edge_freq(val.descriptions().size(), 0);
  for (const InferenceEdge& e : val.edges()) {
    ++edge_freq[static_cast<std::size_t>(e.description)];
  }
  std::vector<InferenceEdge> kept;
  for (const InferenceEdge& e : val.edges()) {
    if (edge_freq[static_cast<std::size_t>(e.description)] == 1) {
      kept.push_back(e);
    }
  }
  return finish_subset(val, kept, spec);
}

std::pair<VisualCommonsenseGraph, SubsetReport> build_novel_subset(
    const VisualCommonsenseGraph& val, const VisualCommonsenseGraph& train,
    const SubsetSpec& spec) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(train.descriptions().size());
  for (const CommonsenseDescription& d : train.descriptions()) {
    seen.insert(d.normalized_text);
  }
  std::vector<InferenceEdge> kept;
  for (const InferenceEdge& e : val.edges()) {
    const std::string& text =
        val.descriptions()[static_cast<std::size_t>(e.description)]
            .normalized_text;
    if (!seen.contains(text)) {
      kept.push_back(e);
    }
  }
  return finish_subset(val, kept, spec);
}

std::string to_json_string(const SubsetReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(report.kind));
  j["images_kept"] = report.images_kept;
  j["edges_kept"] = report.edges_kept;
  j["images_dropped_by_threshold"] = report.images_dropped_by_threshold;
  return j.dump(2);
}

}  // namespace dive
