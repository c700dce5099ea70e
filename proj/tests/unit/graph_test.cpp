#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "dive/error.hpp"
#include "dive/graph.hpp"
#include "test_helpers.hpp"

using dive::DataError;
using dive::EmbeddingMatrix;
using dive::Relation;
using dive::VisualCommonsenseGraph;
using dive::testing::TempDir;
using dive::testing::write_file;

namespace {

EmbeddingMatrix emb_for(std::initializer_list<const char*> ids) {
  EmbeddingMatrix m(2);
  float x = 0.25f;
  for (const char* id : ids) {
    m.add_row(id, std::vector<float>{x, 1.0f});
    x += 0.5f;
  }
  return m;
}

}  // namespace

TEST_CASE("ingest counts images, descriptions and edges") {
  TempDir dir;
  write_file(dir.file("g.jsonl"),
             R"({"image_id":"i1","event":"e","place":"p","relation":"before","description":"walk away"})"
             "\n"
             R"({"image_id":"i2","event":"e","place":"p","relation":"after","description":"walk away"})"
             "\n"
             R"({"image_id":"i1","event":"e","place":"p","relation":"intent","description":"sit down"})"
             "\n");
  const auto g = dive::ingest_jsonl(dir.file("g.jsonl"), emb_for({"i1", "i2"}));
  CHECK(g.images().size() == 2);
  CHECK(g.descriptions().size() == 2);
  CHECK(g.edges().size() == 3);
}

TEST_CASE("normalization merges descriptions and collapses edges") {
  TempDir dir;
  write_file(dir.file("g.jsonl"),
             R"({"image_id":"i1","event":"e","place":"p","relation":"before","description":"Eat dinner"})"
             "\n"
             R"({"image_id":"i1","event":"e","place":"p","relation":"before","description":"eat dinner "})"
             "\n");
  const auto g = dive::ingest_jsonl(dir.file("g.jsonl"), emb_for({"i1"}));
  REQUIRE(g.descriptions().size() == 1);
  CHECK(g.descriptions()[0].normalized_text == "eat dinner");
  CHECK(g.edges().size() == 1);
}

TEST_CASE("unknown relation reports the line number") {
  TempDir dir;
  write_file(dir.file("g.jsonl"),
             R"({"image_id":"i1","event":"e","place":"p","relation":"before","description":"x y"})"
             "\n"
             R"({"image_id":"i1","event":"e","place":"p","relation":"during","description":"x y"})"
             "\n");
  CHECK_THROWS_WITH_AS(dive::ingest_jsonl(dir.file("g.jsonl"), emb_for({"i1"})),
                       doctest::Contains("line 2"), DataError);
}

TEST_CASE("image without embedding is rejected") {
  TempDir dir;
  write_file(dir.file("g.jsonl"),
             R"({"image_id":"iX","event":"e","place":"p","relation":"before","description":"x"})"
             "\n");
  CHECK_THROWS_WITH_AS(dive::ingest_jsonl(dir.file("g.jsonl"), emb_for({"i1"})),
                       doctest::Contains("without embedding"), DataError);
}

TEST_CASE("malformed json reports the line number") {
  TempDir dir;
  write_file(dir.file("g.jsonl"), "{\"image_id\": \"i1\"\n");
  CHECK_THROWS_WITH_AS(dive::ingest_jsonl(dir.file("g.jsonl")),
                       doctest::Contains("line 1"), DataError);
}

TEST_CASE("ingest of serialized output is byte-identical") {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 20; ++round) {
    const auto random = dive::testing::make_random_graph(rng);
    const auto g = VisualCommonsenseGraph::build(random.records, &random.emb);
    const std::string first = dive::to_jsonl(g);

    TempDir dir;
    write_file(dir.file("g.jsonl"), first);
    const auto again = dive::ingest_jsonl(dir.file("g.jsonl"), random.emb);
    CHECK(dive::to_jsonl(again) == first);
  }
}

TEST_CASE("indices stay mutually consistent") {
  std::mt19937_64 rng(7);
  const auto random = dive::testing::make_random_graph(rng);
  const auto g = VisualCommonsenseGraph::build(random.records, &random.emb);

  std::size_t edges_via_images = 0;
  for (std::size_t i = 0; i < g.images().size(); ++i) {
    for (const std::size_t e : g.edges_of_image(i)) {
      CHECK(g.edges()[e].image == i);
      ++edges_via_images;
    }
  }
  CHECK(edges_via_images == g.edges().size());

  for (const auto& d : g.descriptions()) {
    std::set<std::size_t> from_edges;
    for (const auto& e : g.edges()) {
      if (e.description == d.description_id) from_edges.insert(e.image);
    }
    const auto& indexed = g.images_of_description(d.description_id);
    CHECK(std::set<std::size_t>(indexed.begin(), indexed.end()) == from_edges);
    CHECK(!indexed.empty());
  }
}

TEST_CASE("per-relation edge counts sum to the edge total") {
  std::mt19937_64 rng(99);
  const auto random = dive::testing::make_random_graph(rng);
  const auto g = VisualCommonsenseGraph::build(random.records, &random.emb);
  const auto report = dive::graph_stats(g);
  CHECK(report.edges_by_relation[0] + report.edges_by_relation[1] +
            report.edges_by_relation[2] ==
        report.edges);
  std::map<std::pair<int, int>, std::size_t> by_relation_description;
  for (const auto& e : g.edges()) {
    ++by_relation_description[{static_cast<int>(e.relation), e.description}];
  }
  std::size_t grouped = 0;
  for (const auto& [key, count] : by_relation_description) grouped += count;
  CHECK(grouped == g.edges().size());
}

TEST_CASE("stats of the empty graph are all zero") {
  const auto g = VisualCommonsenseGraph::build({});
  const auto report = dive::graph_stats(g);
  CHECK(report.images == 0);
  CHECK(report.edges == 0);
  CHECK(report.distinct_descriptions == 0);
  CHECK(report.top_descriptions.empty());
}

TEST_CASE("stats match a hand tally on a 10-edge graph") {
  std::vector<dive::RawEdgeRecord> records;
  const auto add = [&](const char* img, Relation r, const char* desc) {
    records.push_back(dive::RawEdgeRecord{img, "e", "p", r, desc});
  };
  add("a", Relation::kBefore, "d one");
  add("a", Relation::kAfter, "d one");
  add("a", Relation::kIntent, "d two");
  add("b", Relation::kBefore, "d one");
  add("b", Relation::kBefore, "d two");
  add("b", Relation::kAfter, "d three");
  add("c", Relation::kBefore, "d one");
  add("c", Relation::kAfter, "d two");
  add("c", Relation::kIntent, "d three");
  add("c", Relation::kIntent, "d four");
  const auto g = VisualCommonsenseGraph::build(records);
  const auto report = dive::graph_stats(g, 2);
  CHECK(report.images == 3);
  CHECK(report.edges == 10);
  CHECK(report.edges_by_relation[0] == 4);  // before
  CHECK(report.edges_by_relation[1] == 3);  // after
  CHECK(report.edges_by_relation[2] == 3);  // intent
  CHECK(report.distinct_descriptions == 4);
  REQUIRE(report.top_descriptions.size() == 2);
  CHECK(report.top_descriptions[0].text == "d one");    // 3 images
  CHECK(report.top_descriptions[0].image_count == 3);
  CHECK(report.top_descriptions[1].text == "d two");    // 3 images, later id
  CHECK(report.top_descriptions[1].image_count == 3);
}
