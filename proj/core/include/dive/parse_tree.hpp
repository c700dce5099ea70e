#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dive {

// Labeled ordered tree; leaves carry tokens in sentence order, internal
// nodes carry category labels and have at least one child.
struct ParseNode {
  std::string label;
  std::vector<ParseNode> children;
  bool is_leaf() const { return children.empty(); }
};

struct ParseTree {
  ParseNode root;
  std::vector<std::string> leaves() const;
};

// Penn-style bracketed s-expression, e.g. "(S (NP w1) (VP w2 w3))".
// Errors report 1-based byte positions; a missing ')' reports one past the
// end of the input.
ParseTree parse_bracketed(std::string_view s);

// Mean over leaves of the summed right-sibling counts along each
// root-to-leaf path.
double yngve_sentence(const ParseTree& tree);

// Strictly right-branching binary tree (X w1 (X w2 (X ... (X wn)))) used
// when no parser output accompanies a sentence; a single token yields a
// bare leaf. Its yngve score is (n-1)/n.
ParseTree right_branching_fallback(std::span<const std::string> tokens);

}  // namespace dive
