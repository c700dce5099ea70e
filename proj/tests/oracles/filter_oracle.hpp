#pragma once

// Brute-force re-computation of the generic-inference filter with naive
// O(n^2) loops and plain containers. Deliberately independent of the
// library's implementation; the acceptance suite compares the two.

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dive/embeddings.hpp"
#include "dive/graph.hpp"

namespace dive::oracle {

struct OracleDecision {
  double s = 0.0;
  double p_f = 0.0;
  std::size_t freq = 0;
  std::size_t remove_count = 0;
  std::vector<std::string> removed_images;  // lowest average similarity first
};

struct OracleFilterResult {
  std::map<std::string, OracleDecision> decisions;  // by description text
  // (image_id, relation string, description text), surviving edges only.
  std::set<std::tuple<std::string, std::string, std::string>> surviving;
  std::size_t edges_before = 0;
  std::size_t edges_after = 0;
};

OracleFilterResult apply_filter_naive(
    const std::vector<dive::RawEdgeRecord>& edges,
    const dive::EmbeddingMatrix& emb, double t);

}  // namespace dive::oracle
