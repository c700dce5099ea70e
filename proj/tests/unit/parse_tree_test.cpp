#include <doctest.h>

#include <string>
#include <vector>

#include "dive/error.hpp"
#include "dive/parse_tree.hpp"

using dive::parse_bracketed;
using dive::ParseTree;
using dive::right_branching_fallback;
using dive::yngve_sentence;

TEST_CASE("single-leaf tree") {
  const ParseTree t = parse_bracketed("(S w)");
  CHECK(t.leaves() == std::vector<std::string>{"w"});
  CHECK(yngve_sentence(t) == 0.0);
}

TEST_CASE("three-leaf tree structure") {
  const ParseTree t = parse_bracketed("(S (NP w1) (VP w2 w3))");
  CHECK(t.leaves() == std::vector<std::string>{"w1", "w2", "w3"});
  CHECK(t.root.label == "S");
  REQUIRE(t.root.children.size() == 2);
  CHECK(t.root.children[0].label == "NP");
  CHECK(t.root.children[1].children.size() == 2);
  // Depths: w1 -> 1, w2 -> 1, w3 -> 0.
  CHECK(yngve_sentence(t) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("unbalanced input reports the byte position") {
  CHECK_THROWS_WITH_AS(parse_bracketed("(S (NP w1)"),
                       doctest::Contains("unbalanced at byte 11"),
                       dive::DataError);
  CHECK_THROWS_WITH_AS(parse_bracketed("(S w))"),
                       doctest::Contains("unbalanced at byte 6"),
                       dive::DataError);
}

TEST_CASE("empty nodes are rejected") {
  CHECK_THROWS_WITH_AS(parse_bracketed("()"), doctest::Contains("empty node"),
                       dive::DataError);
  CHECK_THROWS_WITH_AS(parse_bracketed("(S ())"),
                       doctest::Contains("empty node"), dive::DataError);
  CHECK_THROWS_WITH_AS(parse_bracketed("(S)"),
                       doctest::Contains("empty node"), dive::DataError);
}

TEST_CASE("top level must be a bracketed node") {
  CHECK_THROWS_WITH_AS(parse_bracketed("word"),
                       doctest::Contains("expected '('"), dive::DataError);
  CHECK_THROWS_AS(parse_bracketed(""), dive::DataError);
  CHECK_THROWS_AS(parse_bracketed("(S w) trailing"), dive::DataError);
}

TEST_CASE("fully left-branching binary tree depth grows with k") {
  const ParseTree t = parse_bracketed("(X (X (X a b) c) d)");
  CHECK(t.leaves() == std::vector<std::string>{"a", "b", "c", "d"});
  // Deepest leaf has depth k-1: a:3, b:2, c:1, d:0 -> mean 6/4.
  CHECK(yngve_sentence(t) == doctest::Approx(1.5));
}

TEST_CASE("fallback single token is a bare leaf") {
  const std::vector<std::string> one{"a"};
  const ParseTree t = right_branching_fallback(one);
  CHECK(t.root.is_leaf());
  CHECK(t.leaves() == one);
  CHECK(yngve_sentence(t) == 0.0);
}

TEST_CASE("fallback two tokens score one half") {
  const std::vector<std::string> two{"a", "b"};
  CHECK(yngve_sentence(right_branching_fallback(two)) == doctest::Approx(0.5));
}

TEST_CASE("fallback score is (n-1)/n for n tokens") {
  for (std::size_t n = 1; n <= 10; ++n) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) {
      tokens.push_back("t" + std::to_string(i));
    }
    const ParseTree t = right_branching_fallback(tokens);
    CHECK(t.leaves() == tokens);
    CHECK(yngve_sentence(t) ==
          doctest::Approx(double(n - 1) / double(n)).epsilon(1e-12));
  }
}
