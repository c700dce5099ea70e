#include "dive/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dive/error.hpp"
#include "dive/rng.hpp"
#include "dive/text.hpp"

namespace dive {
namespace {

Eigen::VectorXd feature_row_as_double(const EmbeddingMatrix& emb,
                                      const VisualCommonsenseGraph& g,
                                      std::size_t image) {
  const std::string& id = g.images()[image].image_id;
  const auto row = emb.row_of(id);
  if (!row) {
    throw DataError("missing embedding for image '" + id + "'");
  }
  const auto span = emb.row(*row);
  Eigen::VectorXd out(static_cast<Eigen::Index>(span.size()));
  for (std::size_t i = 0; i < span.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = span[i];
  }
  return out;
}

// Distinct description ids of an image, ascending.
std::vector<int> descriptions_of_image(const VisualCommonsenseGraph& g,
                                       std::size_t image) {
  std::set<int> descs;
  for (const std::size_t e : g.edges_of_image(image)) {
    descs.insert(g.edges()[e].description);
  }
  return {descs.begin(), descs.end()};
}

}  // namespace

std::vector<ContrastiveBatchItem> sample_contrastive_batch(
    const VisualCommonsenseGraph& g, const EmbeddingMatrix& emb,
    const ToyVocab& vocab, std::uint64_t rng_seed,
    const BatchOptions& options) {
  if (options.h_size < 2) {
    throw DataError("|H| must be at least 2");
  }
  std::mt19937_64 rng(rng_seed);
  std::vector<ContrastiveBatchItem> items;
  items.reserve(g.edges().size());

  for (const InferenceEdge& anchor_edge : g.edges()) {
    const std::size_t anchor = anchor_edge.image;
    const int shared_desc = anchor_edge.description;
    const auto& related = g.images_of_description(shared_desc);

    ContrastiveBatchItem item;
    item.positive_index = 0;
    item.images.push_back(feature_row_as_double(emb, g, anchor));
    item.image_ids.push_back(g.images()[anchor].image_id);

    if (related.size() < 2) {
      // No similar image exists: LM-only item on the anchor's description.
      item.crl_enabled = false;
      item.text = g.descriptions()[static_cast<std::size_t>(shared_desc)]
                      .normalized_text;
      item.tokens = vocab.encode(item.text);
      items.push_back(std::move(item));
      continue;
    }

    std::vector<std::size_t> pool;
    pool.reserve(related.size() - 1);
    for (const std::size_t img : related) {
      if (img != anchor) pool.push_back(img);
    }
    const std::size_t negatives =
        std::min(options.h_size - 1, pool.size());
    for (std::size_t k = 0; k < negatives; ++k) {
      const std::size_t j = k + uniform_below(rng, pool.size() - k);
      std::swap(pool[k], pool[j]);
      item.images.push_back(feature_row_as_double(emb, g, pool[k]));
      item.image_ids.push_back(g.images()[pool[k]].image_id);
    }

    // Candidate positives: (member, description) pairs where the
    // description relates to no other member of H. Member order inside H is
    // anchor-first, so enumerate members by image id for the contract.
    std::vector<std::size_t> member_order(item.images.size());
    for (std::size_t i = 0; i < member_order.size(); ++i) member_order[i] = i;
    std::vector<std::size_t> member_image(item.images.size());
    member_image[0] = anchor;
    for (std::size_t i = 1; i < item.images.size(); ++i) {
      member_image[i] = pool[i - 1];
    }
    std::sort(member_order.begin(), member_order.end(),
              [&](std::size_t a, std::size_t b) {
                return member_image[a] < member_image[b];
              });

    std::vector<std::vector<int>> descs(item.images.size());
    for (std::size_t i = 0; i < item.images.size(); ++i) {
      descs[i] = descriptions_of_image(g, member_image[i]);
    }
    std::vector<std::pair<std::size_t, int>> candidates;
    for (const std::size_t i : member_order) {
      for (const int d : descs[i]) {
        bool unique = true;
        for (std::size_t o = 0; o < item.images.size(); ++o) {
          if (o == i) continue;
          if (std::binary_search(descs[o].begin(), descs[o].end(), d)) {
            unique = false;
            break;
          }
        }
        if (unique) candidates.emplace_back(i, d);
      }
    }

    if (candidates.empty()) {
      item.crl_enabled = false;
      item.text = g.descriptions()[static_cast<std::size_t>(shared_desc)]
                      .normalized_text;
      item.tokens = vocab.encode(item.text);
    } else {
      const auto& [member, desc] =
          candidates[uniform_below(rng, candidates.size())];
      item.positive_index = member;
      item.text =
          g.descriptions()[static_cast<std::size_t>(desc)].normalized_text;
      item.tokens = vocab.encode(item.text);
    }
    items.push_back(std::move(item));
  }
  return items;
}

ToyDataset load_toy_dataset_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open toy dataset " + path.string());
  }
  ToyDataset data;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      ToyImage img;
      img.image_id = j.at("image_id").get<std::string>();
      const auto rows = j.at("features").get<std::vector<std::vector<double>>>();
      if (rows.empty() || rows[0].empty()) {
        throw DataError("image '" + img.image_id + "' has no features");
      }
      if (dim < 0) dim = static_cast<Eigen::Index>(rows[0].size());
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
      for (const auto& row : rows) {
        if (static_cast<Eigen::Index>(row.size()) != dim) {
          throw DataError("inconsistent feature width for image '" +
                          img.image_id + "'");
        }
        for (Eigen::Index i = 0; i < dim; ++i) {
          if (!std::isfinite(row[static_cast<std::size_t>(i)])) {
            throw DataError("non-finite feature for image '" + img.image_id +
                            "'");
          }
          sum(i) += row[static_cast<std::size_t>(i)];
        }
      }
      img.features = sum / static_cast<double>(rows.size());
      if (img.features.norm() == 0.0) {
        throw DataError("zero-norm features for image '" + img.image_id +
                        "'");
      }
      for (const auto& d : j.at("descriptions").get<std::vector<std::string>>()) {
        img.descriptions.push_back(normalize_text(d));
        if (img.descriptions.back().empty()) {
          throw DataError("empty description for image '" + img.image_id +
                          "'");
        }
      }
      img.shared_description =
          normalize_text(j.at("shared_description").get<std::string>());
      if (img.shared_description.empty()) {
        throw DataError("empty shared_description for image '" +
                        img.image_id + "'");
      }
      data.push_back(std::move(img));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

void write_toy_dataset_jsonl(const ToyDataset& data,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  for (const ToyImage& img : data) {
    nlohmann::ordered_json j;
    j["image_id"] = img.image_id;
    std::vector<double> row(img.features.data(),
                            img.features.data() + img.features.size());
    j["features"] = std::vector<std::vector<double>>{row};
    j["descriptions"] = img.descriptions;
    j["shared_description"] = img.shared_description;
    out << j.dump() << '\n';
  }
}

std::pair<VisualCommonsenseGraph, EmbeddingMatrix> to_graph(
    const ToyDataset& data) {
  if (data.empty()) {
    throw DataError("empty toy dataset");
  }
  EmbeddingMatrix emb(static_cast<std::size_t>(data[0].features.size()));
  std::vector<RawEdgeRecord> records;
  for (const ToyImage& img : data) {
    std::vector<float> row(static_cast<std::size_t>(img.features.size()));
    for (Eigen::Index i = 0; i < img.features.size(); ++i) {
      row[static_cast<std::size_t>(i)] = static_cast<float>(img.features(i));
    }
    emb.add_row(img.image_id, row);
    records.push_back(RawEdgeRecord{img.image_id, "", "", Relation::kIntent,
                                    img.shared_description});
    for (const std::string& d : img.descriptions) {
      records.push_back(
          RawEdgeRecord{img.image_id, "", "", Relation::kIntent, d});
    }
  }
  VisualCommonsenseGraph g = VisualCommonsenseGraph::build(records, &emb);
  return {std::move(g), std::move(emb)};
}

ToyVocab vocab_from_graph(const VisualCommonsenseGraph& g) {
  std::vector<std::string> texts;
  texts.reserve(g.descriptions().size());
  for (const CommonsenseDescription& d : g.descriptions()) {
    texts.push_back(d.normalized_text);
  }
  return ToyVocab::build(texts);
}

ToyDataset make_synthetic_clusters(const SyntheticClustersConfig& config) {
  if (config.clusters == 0 || config.images_per_cluster < 2 ||
      config.dim == 0) {
    throw DataError("synthetic clusters need >=1 cluster, >=2 images each");
  }
  std::mt19937_64 rng(config.seed);
  const auto random_unit = [&]() {
    Eigen::VectorXd v(static_cast<Eigen::Index>(config.dim));
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = 2.0 * uniform_double(rng) - 1.0;
      }
      norm = v.norm();
    } while (norm < 1e-6);
    return Eigen::VectorXd(v / norm);
  };

  ToyDataset data;
  data.reserve(config.clusters * config.images_per_cluster);
  for (std::size_t c = 0; c < config.clusters; ++c) {
    const Eigen::VectorXd base = random_unit();
    for (std::size_t i = 0; i < config.images_per_cluster; ++i) {
      ToyImage img;
      img.image_id =
          "img_c" + std::to_string(c) + "_" + std::to_string(i);
      img.features = base + config.offset_scale * random_unit();
      img.shared_description = "cluster " + std::to_string(c) + " activity";
      img.descriptions.push_back("marker m" + std::to_string(data.size()));
      data.push_back(std::move(img));
    }
  }
  return data;
}

}  // namespace dive
