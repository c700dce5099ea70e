#include <doctest.h>

#include "dive/text.hpp"

using dive::normalize_text;
using dive::tokenize;

TEST_CASE("normalize lowercases and collapses whitespace") {
  CHECK(normalize_text("Eat dinner") == "eat dinner");
  CHECK(normalize_text("eat dinner ") == "eat dinner");
  CHECK(normalize_text("  EAT\t\tDINNER  ") == "eat dinner");
  CHECK(normalize_text("eat\ndinner") == "eat dinner");
}

TEST_CASE("normalize strips trailing sentence punctuation") {
  CHECK(normalize_text("go home.") == "go home");
  CHECK(normalize_text("go home?!") == "go home");
  CHECK(normalize_text("go home . ") == "go home");
  CHECK(normalize_text("a.b stays") == "a.b stays");
  CHECK(normalize_text("...") == "");
}

TEST_CASE("normalize handles non-ascii whitespace") {
  // U+00A0 no-break space and U+2003 em space act as separators.
  CHECK(normalize_text("a\xC2\xA0") == "a");
  CHECK(normalize_text("a\xC2\xA0希") == "a \xE5\xB8\x8C");
  CHECK(normalize_text("a\xE2\x80\x83裂") == "a \xE8\xA3\x82");
}

TEST_CASE("normalization is idempotent") {
  const char* samples[] = {"Eat Dinner!", "  a  B c.", "x\ty?  ", "..a.."};
  for (const char* s : samples) {
    const std::string once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("tokenize splits on whitespace runs") {
  CHECK(tokenize("a b c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("  a   b ") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("one") == std::vector<std::string>{"one"});
}
