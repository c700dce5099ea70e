#include "dive/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "dive/error.hpp"
#include "dive/text.hpp"

namespace dive {

Relation relation_from_string(std::string_view s) {
  if (s == "before") return Relation::kBefore;
  if (s == "after") return Relation::kAfter;
  if (s == "intent") return Relation::kIntent;
  throw DataError("unknown relation '" + std::string(s) +
                  "' (expected before|after|intent)");
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kBefore:
      return "before";
    case Relation::kAfter:
      return "after";
    case Relation::kIntent:
      return "intent";
  }
  return "?";
}

VisualCommonsenseGraph VisualCommonsenseGraph::build(
    const std::vector<RawEdgeRecord>& records,
    const EmbeddingMatrix* embeddings,
    const std::vector<ImageRecord>* extra_images) {
  VisualCommonsenseGraph g;

  // Image table: first-seen event/place per id, then canonical id order.
  std::unordered_map<std::string, std::size_t> first_seen;
  std::vector<ImageRecord> image_pool;
  const auto see_image = [&](const std::string& id, const std::string& event,
                             const std::string& place) {
    if (first_seen.emplace(id, image_pool.size()).second) {
      image_pool.push_back(ImageRecord{id, event, place, std::nullopt});
    }
  };
  if (extra_images != nullptr) {
    for (const ImageRecord& img : *extra_images) {
      see_image(img.image_id, img.event, img.place);
    }
  }
  for (const RawEdgeRecord& r : records) {
    see_image(r.image_id, r.event, r.place);
  }
  g.images_ = std::move(image_pool);
  std::sort(g.images_.begin(), g.images_.end(),
            [](const ImageRecord& a, const ImageRecord& b) {
              return a.image_id < b.image_id;
            });
  for (std::size_t i = 0; i < g.images_.size(); ++i) {
    ImageRecord& img = g.images_[i];
    if (embeddings != nullptr) {
      const auto row = embeddings->row_of(img.image_id);
      if (!row) {
        throw DataError("image_id without embedding: '" + img.image_id + "'");
      }
      img.embedding_row = row;
    } else {
      img.embedding_row = std::nullopt;
    }
    g.image_index_.emplace(img.image_id, i);
  }

  // Description table: dense ids in lexicographic order of normalized text.
  std::unordered_map<std::string, std::string> first_raw;
  std::vector<std::string> normalized_per_record;
  normalized_per_record.reserve(records.size());
  for (const RawEdgeRecord& r : records) {
    std::string norm = normalize_text(r.description);
    if (norm.empty()) {
      throw DataError("description '" + r.description +
                      "' is empty after normalization");
    }
    first_raw.try_emplace(norm, r.description);
    normalized_per_record.push_back(std::move(norm));
  }
  {
    std::vector<std::string> texts;
    texts.reserve(first_raw.size());
    for (const auto& [norm, raw] : first_raw) {
      texts.push_back(norm);
    }
    std::sort(texts.begin(), texts.end());
    g.descriptions_.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      CommonsenseDescription d;
      d.description_id = static_cast<int>(i);
      d.normalized_text = texts[i];
      d.raw_text = first_raw.at(texts[i]);
      g.description_index_.emplace(texts[i], d.description_id);
      g.descriptions_.push_back(std::move(d));
    }
  }

  // Edge table: map to indices, collapse duplicates, canonical sort.
  std::set<std::tuple<std::size_t, int, int>> seen;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const std::size_t img = g.image_index_.at(records[k].image_id);
    const int desc = g.description_index_.at(normalized_per_record[k]);
    seen.emplace(img, static_cast<int>(records[k].relation), desc);
  }
  g.edges_.reserve(seen.size());
  for (const auto& [img, rel, desc] : seen) {
    g.edges_.push_back(
        InferenceEdge{img, static_cast<Relation>(rel), desc});
  }

  g.images_by_description_.assign(g.descriptions_.size(), {});
  g.edges_by_image_.assign(g.images_.size(), {});
  for (std::size_t e = 0; e < g.edges_.size(); ++e) {
    const InferenceEdge& edge = g.edges_[e];
    auto& imgs =
        g.images_by_description_[static_cast<std::size_t>(edge.description)];
    if (imgs.empty() || imgs.back() != edge.image) {
      imgs.push_back(edge.image);
    }
    g.edges_by_image_[edge.image].push_back(e);
  }
  for (auto& imgs : g.images_by_description_) {
    std::sort(imgs.begin(), imgs.end());
    imgs.erase(std::unique(imgs.begin(), imgs.end()), imgs.end());
  }
  return g;
}

std::optional<std::size_t> VisualCommonsenseGraph::image_index(
    std::string_view image_id) const {
  const auto it = image_index_.find(std::string(image_id));
  if (it == image_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> VisualCommonsenseGraph::description_id(
    std::string_view normalized) const {
  const auto it = description_index_.find(std::string(normalized));
  if (it == description_index_.end()) return std::nullopt;
  return it->second;
}

RawEdgeRecord VisualCommonsenseGraph::edge_record(
    const InferenceEdge& e) const {
  const ImageRecord& img = images_[e.image];
  return RawEdgeRecord{
      img.image_id, img.event, img.place, e.relation,
      descriptions_[static_cast<std::size_t>(e.description)].normalized_text};
}

namespace {

std::vector<RawEdgeRecord> parse_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open graph file " + path.string());
  }
  std::vector<RawEdgeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    RawEdgeRecord r;
    try {
      r.image_id = j.at("image_id").get<std::string>();
      r.event = j.value("event", std::string{});
      r.place = j.value("place", std::string{});
      r.relation = relation_from_string(j.at("relation").get<std::string>());
      r.description = j.at("description").get<std::string>();
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (r.image_id.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty image_id");
    }
    if (normalize_text(r.description).empty()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": description is empty after normalization");
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

VisualCommonsenseGraph ingest_jsonl(const std::filesystem::path& path,
                                    const EmbeddingMatrix& embeddings) {
  return VisualCommonsenseGraph::build(parse_jsonl(path), &embeddings);
}

VisualCommonsenseGraph ingest_jsonl(const std::filesystem::path& path) {
  return VisualCommonsenseGraph::build(parse_jsonl(path));
}

std::string to_jsonl(const VisualCommonsenseGraph& g) {
  std::string out;
  for (const InferenceEdge& e : g.edges()) {
    const RawEdgeRecord r = g.edge_record(e);
    nlohmann::ordered_json j;
    j["image_id"] = r.image_id;
    j["event"] = r.event;
    j["place"] = r.place;
    j["relation"] = std::string(to_string(r.relation));
    j["description"] = r.description;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const VisualCommonsenseGraph& g,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << to_jsonl(g);
}

StatsReport graph_stats(const VisualCommonsenseGraph& g, std::size_t top_k) {
  StatsReport report;
  report.images = g.images().size();
  report.edges = g.edges().size();
  report.distinct_descriptions = g.descriptions().size();
  for (const InferenceEdge& e : g.edges()) {
    ++report.edges_by_relation[static_cast<std::size_t>(e.relation)];
  }
  std::vector<DescriptionFrequency> freq;
  freq.reserve(g.descriptions().size());
  for (const CommonsenseDescription& d : g.descriptions()) {
    freq.push_back(DescriptionFrequency{
        d.normalized_text, d.description_id,
        g.images_of_description(d.description_id).size()});
  }
  std::sort(freq.begin(), freq.end(),
            [](const DescriptionFrequency& a, const DescriptionFrequency& b) {
              if (a.image_count != b.image_count) {
                return a.image_count > b.image_count;
              }
              return a.description_id < b.description_id;
            });
  if (freq.size() > top_k) {
    freq.resize(top_k);
  }
  report.top_descriptions = std::move(freq);
  return report;
}

std::string to_json_string(const StatsReport& report) {
  nlohmann::ordered_json j;
  j["images"] = report.images;
  j["edges"] = report.edges;
  j["edges_by_relation"] = {
      {"before", report.edges_by_relation[0]},
      {"after", report.edges_by_relation[1]},
      {"intent", report.edges_by_relation[2]},
  };
  j["distinct_descriptions"] = report.distinct_descriptions;
  auto top = nlohmann::ordered_json::array();
  for (const DescriptionFrequency& d : report.top_descriptions) {
    top.push_back({{"description", d.text},
                   {"description_id", d.description_id},
                   {"image_count", d.image_count}});
  }
  j["top_descriptions"] = std::move(top);
  return j.dump(2);
}

}  // namespace dive
