#include <doctest.h>

#include <vector>

#include "dive/embeddings.hpp"
#include "dive/error.hpp"
#include "test_helpers.hpp"

using dive::DataError;
using dive::EmbeddingMatrix;
using dive::testing::TempDir;

namespace {

EmbeddingMatrix two_by_four() {
  EmbeddingMatrix m(4);
  m.add_row("a", std::vector<float>{1.0f, 0.0f, 0.0f, 0.0f});
  m.add_row("b", std::vector<float>{0.5f, 0.5f, 0.25f, 0.125f});
  return m;
}

}  // namespace

TEST_CASE("round trip preserves rows and ids") {
  TempDir dir;
  const auto path = dir.file("emb.bin");
  two_by_four().save(path);
  const EmbeddingMatrix loaded = EmbeddingMatrix::load(path);
  REQUIRE(loaded.rows() == 2);
  REQUIRE(loaded.dim() == 4);
  CHECK(loaded.row_id(0) == "a");
  CHECK(loaded.row_id(1) == "b");
  CHECK(loaded.row(1)[3] == 0.125f);
  CHECK(loaded.row_of("b") == 1);
  CHECK(!loaded.row_of("missing").has_value());
}

TEST_CASE("magic mismatch is rejected") {
  TempDir dir;
  const auto path = dir.file("bad.bin");
  dive::testing::write_file(path, "NOTDIVE0xxxxxxxxxxxxxxxx");
  dive::testing::write_file(dir.file("bad.bin.ids.jsonl"), "");
  CHECK_THROWS_WITH_AS(EmbeddingMatrix::load(path),
                       doctest::Contains("magic mismatch"), DataError);
}

TEST_CASE("truncated payload is rejected") {
  TempDir dir;
  const auto path = dir.file("emb.bin");
  two_by_four().save(path);
  auto bytes = dive::testing::read_file(path);
  bytes.resize(bytes.size() - 5);
  dive::testing::write_file(path, bytes);
  CHECK_THROWS_WITH_AS(EmbeddingMatrix::load(path),
                       doctest::Contains("truncated payload"), DataError);
}

TEST_CASE("zero-norm row is rejected") {
  EmbeddingMatrix m(3);
  CHECK_THROWS_WITH_AS(m.add_row("z", std::vector<float>{0.0f, 0.0f, 0.0f}),
                       doctest::Contains("zero-norm row"), DataError);
}

TEST_CASE("non-finite value is rejected") {
  EmbeddingMatrix m(2);
  const float inf = std::numeric_limits<float>::infinity();
  CHECK_THROWS_WITH_AS(m.add_row("n", std::vector<float>{1.0f, inf}),
                       doctest::Contains("non-finite"), DataError);
}

TEST_CASE("sidecar row count must match the header") {
  TempDir dir;
  const auto path = dir.file("emb.bin");
  two_by_four().save(path);
  dive::testing::write_file(dir.file("emb.bin.ids.jsonl"),
                            "{\"image_id\": \"a\"}\n");
  CHECK_THROWS_AS(EmbeddingMatrix::load(path), DataError);
}

TEST_CASE("cosine similarity is computed in double") {
  EmbeddingMatrix m = two_by_four();
  CHECK(dive::cosine_similarity(m.row(0), m.row(0)) == doctest::Approx(1.0));
  EmbeddingMatrix o(2);
  o.add_row("x", std::vector<float>{1.0f, 0.0f});
  o.add_row("y", std::vector<float>{0.0f, 2.0f});
  CHECK(dive::cosine_similarity(o.row(0), o.row(1)) == 0.0);
}
