#include "filter_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace dive::oracle {
namespace {

double naive_cosine(const dive::EmbeddingMatrix& emb, const std::string& a,
                    const std::string& b) {
  const auto ra = emb.row(*emb.row_of(a));
  const auto rb = emb.row(*emb.row_of(b));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    dot += double(ra[i]) * double(rb[i]);
    na += double(ra[i]) * double(ra[i]);
    nb += double(rb[i]) * double(rb[i]);
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

OracleFilterResult apply_filter_naive(
    const std::vector<dive::RawEdgeRecord>& edges,
    const dive::EmbeddingMatrix& emb, double t) {
  // Distinct related images per description text.
  std::map<std::string, std::set<std::string>> related;
  std::set<std::tuple<std::string, std::string, std::string>> edge_set;
  for (const dive::RawEdgeRecord& e : edges) {
    related[e.description].insert(e.image_id);
    edge_set.insert({e.image_id, std::string(dive::to_string(e.relation)),
                     e.description});
  }

  OracleFilterResult result;
  result.edges_before = edge_set.size();

  std::map<std::string, std::set<std::string>> removed_by_desc;
  for (const auto& [desc, images] : related) {
    OracleDecision d;
    d.freq = images.size();
    const std::vector<std::string> ids(images.begin(), images.end());
    const std::size_t n = ids.size();

    if (n == 1) {
      d.s = 1.0;
    } else {
      double sum = 0.0;
      for (const std::string& x : ids) {
        for (const std::string& y : ids) {
          sum += naive_cosine(emb, x, y);
        }
      }
      d.s = sum / (double(n) * double(n));
    }

    const double radicand = t * d.s / double(n);
    if (radicand <= 0.0) {
      d.p_f = 1.0;
    } else {
      d.p_f = std::min(1.0, std::max(0.0, 1.0 - std::sqrt(radicand)));
    }
    d.remove_count =
        static_cast<std::size_t>(std::floor(d.p_f * double(n)));

    std::vector<std::pair<double, std::string>> ranked;
    for (const std::string& x : ids) {
      double avg = 1.0;
      if (n > 1) {
        double sum = 0.0;
        for (const std::string& y : ids) {
          if (y != x) sum += naive_cosine(emb, x, y);
        }
        avg = sum / double(n - 1);
      }
      ranked.emplace_back(avg, x);
    }
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t k = 0; k < d.remove_count; ++k) {
      d.removed_images.push_back(ranked[k].second);
      removed_by_desc[desc].insert(ranked[k].second);
    }
    result.decisions.emplace(desc, std::move(d));
  }

  for (const auto& edge : edge_set) {
    const auto& [image, relation, desc] = edge;
    const auto it = removed_by_desc.find(desc);
    if (it != removed_by_desc.end() && it->second.count(image) > 0) {
      continue;
    }
    result.surviving.insert(edge);
  }
  result.edges_after = result.surviving.size();
  return result;
}

}  // namespace dive::oracle
