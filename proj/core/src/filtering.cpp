#include "dive/filtering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dive/error.hpp"

namespace dive {
namespace {

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("DIVE_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) n = static_cast<std::size_t>(parsed);
  }
  return std::min(std::max<std::size_t>(n, 1), std::max<std::size_t>(jobs, 1));
}

// Runs fn(i) for i in [0, jobs) across workers; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t jobs, Fn&& fn) {
  const std::size_t workers = worker_count(jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> unit_row(std::span<const float> row) {
  double norm_sq = 0.0;
  for (const float v : row) norm_sq += double(v) * double(v);
  const double norm = std::sqrt(norm_sq);
  std::vector<double> unit(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) unit[i] = double(row[i]) / norm;
  return unit;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct DescriptionAnalysis {
  ConcentrationScore score;
  // (image index, avg cosine to others) ascending by avg, ties by image id.
  std::vector<std::pair<std::size_t, double>> ranking;
};

// The double sum of pairwise cosines over 𝒢(C_j)² equals the squared norm of
// the summed unit vectors, so one pass over the rows suffices.
DescriptionAnalysis analyze_description(int description_id,
                                        const VisualCommonsenseGraph& g,
                                        const EmbeddingMatrix& emb) {
  const auto& members = g.images_of_description(description_id);
  DescriptionAnalysis out;
  out.score.description_id = description_id;
  out.score.freq = members.size();

  if (members.size() == 1) {
    out.score.s_value = 1.0;  // self-pair only
    out.ranking.emplace_back(members[0], 1.0);
    return out;
  }

  std::vector<std::vector<double>> units;
  units.reserve(members.size());
  for (const std::size_t img : members) {
    const std::string& id = g.images()[img].image_id;
    const auto row = emb.row_of(id);
    if (!row) {
      throw DataError("missing embedding for image '" + id + "'");
    }
    units.push_back(unit_row(emb.row(*row)));
  }

  if (members.size() == 2) {
    // Both members tie exactly at the pair cosine; the ranking then falls
    // through to the image-id order.
    const double c = dot(units[0], units[1]);
    out.score.s_value = std::clamp((1.0 + c) / 2.0, -1.0, 1.0);
    out.ranking.emplace_back(members[0], c);
    out.ranking.emplace_back(members[1], c);
    return out;
  }

  std::vector<double> sum(emb.dim(), 0.0);
  for (const auto& u : units) {
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += u[d];
  }
  const double n = static_cast<double>(members.size());
  out.score.s_value = std::clamp(dot(sum, sum) / (n * n), -1.0, 1.0);

  out.ranking.reserve(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const double avg = (dot(units[k], sum) - dot(units[k], units[k])) / (n - 1.0);
    out.ranking.emplace_back(members[k], avg);
  }
  // Members arrive in ascending image-id order, so a stable sort keeps the
  // id tie-break.
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const auto& a, const auto& b) {
                     return a.second < b.second;
                   });
  return out;
}

void require_fully_embedded(const VisualCommonsenseGraph& g,
                            const EmbeddingMatrix& emb) {
  for (const ImageRecord& img : g.images()) {
    if (!emb.row_of(img.image_id)) {
      throw DataError("missing embedding for image '" + img.image_id + "'");
    }
  }
}

std::vector<DescriptionAnalysis> analyze_all(const VisualCommonsenseGraph& g,
                                             const EmbeddingMatrix& emb) {
  std::vector<DescriptionAnalysis> all(g.descriptions().size());
  parallel_for(all.size(), [&](std::size_t d) {
    all[d] = analyze_description(static_cast<int>(d), g, emb);
  });
  return all;
}

FilterDecision make_decision(const DescriptionAnalysis& a,
                             const VisualCommonsenseGraph& g, double t) {
  FilterDecision d;
  d.description_id = a.score.description_id;
  d.description =
      g.descriptions()[static_cast<std::size_t>(d.description_id)]
          .normalized_text;
  d.s_value = a.score.s_value;
  d.freq = a.score.freq;
  d.p_f = filtering_probability(a.score, t);
  d.remove_count = static_cast<std::size_t>(
      std::floor(d.p_f * static_cast<double>(d.freq)));
  d.removed_image_ids.reserve(d.remove_count);
  for (std::size_t k = 0; k < d.remove_count; ++k) {
    d.removed_image_ids.push_back(g.images()[a.ranking[k].first].image_id);
  }
  return d;
}

}  // namespace

ConcentrationScore semantic_concentration(int description_id,
                                          const VisualCommonsenseGraph& g,
                                          const EmbeddingMatrix& emb) {
  return analyze_description(description_id, g, emb).score;
}

double filtering_probability(const ConcentrationScore& s, double t) {
  if (!(t > 0.0)) {
    throw DataError("filtering threshold must be positive");
  }
  const double radicand = t * s.s_value / static_cast<double>(s.freq);
  if (radicand <= 0.0) {
    return 1.0;
  }
  return std::clamp(1.0 - std::sqrt(radicand), 0.0, 1.0);
}

std::vector<RankedImage> rank_images_by_avg_similarity(
    int description_id, const VisualCommonsenseGraph& g,
    const EmbeddingMatrix& emb) {
  const DescriptionAnalysis a = analyze_description(description_id, g, emb);
  std::vector<RankedImage> out;
  out.reserve(a.ranking.size());
  for (const auto& [img, avg] : a.ranking) {
    out.push_back(RankedImage{g.images()[img].image_id, avg});
  }
  return out;
}

std::pair<VisualCommonsenseGraph, FilterReport> apply_filter(
    const VisualCommonsenseGraph& g, const EmbeddingMatrix& emb, double t) {
  if (!(t > 0.0)) {
    throw DataError("filtering threshold must be positive");
  }
  require_fully_embedded(g, emb);
  const std::vector<DescriptionAnalysis> all = analyze_all(g, emb);

  FilterReport report;
  report.threshold = t;
  report.edges_before = g.edges().size();

  // (description, image) pairs slated for removal.
  std::vector<std::unordered_set<std::size_t>> removed(all.size());
  report.decisions.reserve(all.size());
  for (const DescriptionAnalysis& a : all) {
    FilterDecision d = make_decision(a, g, t);
    auto& set = removed[static_cast<std::size_t>(d.description_id)];
    for (std::size_t k = 0; k < d.remove_count; ++k) {
      set.insert(a.ranking[k].first);
    }
    report.decisions.push_back(std::move(d));
  }

  std::vector<RawEdgeRecord> surviving;
  surviving.reserve(g.edges().size());
  for (const InferenceEdge& e : g.edges()) {
    if (removed[static_cast<std::size_t>(e.description)].contains(e.image)) {
      const RawEdgeRecord r = g.edge_record(e);
      report.removed_edges.push_back(
          RemovedEdge{r.image_id, r.relation, r.description});
    } else {
      surviving.push_back(g.edge_record(e));
    }
  }
  report.edges_after = report.edges_before - report.removed_edges.size();

  VisualCommonsenseGraph filtered =
      VisualCommonsenseGraph::build(surviving, &emb, &g.images());
  return {std::move(filtered), std::move(report)};
}

std::vector<SweepEntry> threshold_sweep(const VisualCommonsenseGraph& g,
                                        const EmbeddingMatrix& emb,
                                        std::span<const double> thresholds) {
  if (thresholds.empty()) {
    return {};
  }
  for (const double t : thresholds) {
    if (!(t > 0.0)) {
      throw DataError("filtering threshold must be positive");
    }
  }
  require_fully_embedded(g, emb);
  const std::vector<DescriptionAnalysis> all = analyze_all(g, emb);

  // Edge multiplicity per (description, image); one image can carry several
  // relations to the same description.
  std::vector<std::unordered_map<std::size_t, std::size_t>> edge_count(
      all.size());
  for (const InferenceEdge& e : g.edges()) {
    ++edge_count[static_cast<std::size_t>(e.description)][e.image];
  }

  std::vector<SweepEntry> entries;
  entries.reserve(thresholds.size());
  for (const double t : thresholds) {
    SweepEntry entry;
    entry.threshold = t;
    entry.edges_before = g.edges().size();
    for (const DescriptionAnalysis& a : all) {
      const double p_f = filtering_probability(a.score, t);
      const auto remove_count = static_cast<std::size_t>(
          std::floor(p_f * static_cast<double>(a.score.freq)));
      if (remove_count == a.score.freq) {
        ++entry.descriptions_dropped;
      }
      const auto& counts =
          edge_count[static_cast<std::size_t>(a.score.description_id)];
      for (std::size_t k = 0; k < remove_count; ++k) {
        entry.removed_edges += counts.at(a.ranking[k].first);
      }
    }
    entry.edges_after = entry.edges_before - entry.removed_edges;
    entries.push_back(entry);
  }
  return entries;
}

std::string to_json_string(const FilterReport& report) {
  nlohmann::ordered_json j;
  j["threshold"] = report.threshold;
  j["edges_before"] = report.edges_before;
  j["edges_after"] = report.edges_after;
  auto decisions = nlohmann::ordered_json::array();
  for (const FilterDecision& d : report.decisions) {
    decisions.push_back({{"description", d.description},
                         {"s", d.s_value},
                         {"p_f", d.p_f},
                         {"remove_count", d.remove_count},
                         {"removed_images", d.removed_image_ids}});
  }
  j["decisions"] = std::move(decisions);
  return j.dump(2);
}

std::string to_json_string(const std::vector<SweepEntry>& sweep) {
  auto arr = nlohmann::ordered_json::array();
  for (const SweepEntry& e : sweep) {
    arr.push_back({{"threshold", e.threshold},
                   {"edges_before", e.edges_before},
                   {"edges_after", e.edges_after},
                   {"removed_edges", e.removed_edges},
                   {"descriptions_dropped", e.descriptions_dropped}});
  }
  return arr.dump(2);
}

}  // namespace dive
