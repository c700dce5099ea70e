#include "dive/parse_tree.hpp"

#include <cstddef>

#include "dive/error.hpp"

namespace dive {
namespace {

void collect_leaves(const ParseNode& node, std::vector<std::string>& out) {
  if (node.is_leaf()) {
    out.push_back(node.label);
    return;
  }
  for (const ParseNode& child : node.children) {
    collect_leaves(child, out);
  }
}

void accumulate_depths(const ParseNode& node, double acc, double& sum,
                       std::size_t& leaves) {
  if (node.is_leaf()) {
    sum += acc;
    ++leaves;
    return;
  }
  const std::size_t n = node.children.size();
  for (std::size_t c = 0; c < n; ++c) {
    const double right_siblings = static_cast<double>(n - 1 - c);
    accumulate_depths(node.children[c], acc + right_siblings, sum, leaves);
  }
}

class BracketParser {
 public:
  explicit BracketParser(std::string_view s) : s_(s) {}

  ParseTree parse() {
    skip_ws();
    if (at_end()) {
      throw DataError("empty input");
    }
    if (peek() != '(') {
      fail("expected '('");
    }
    ParseTree tree{parse_node()};
    skip_ws();
    if (!at_end()) {
      if (peek() == ')') {
        fail("unbalanced");
      }
      fail("unexpected content");
    }
    return tree;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  // 1-based byte position; one past the end at EOF.
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(what + " at byte " + std::to_string(pos_ + 1));
  }

  void skip_ws() {
    while (!at_end()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
          c == '\v') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string read_token() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = peek();
      if (c == '(' || c == ')' || c == ' ' || c == '\t' || c == '\n' ||
          c == '\r' || c == '\f' || c == '\v') {
        break;
      }
      ++pos_;
    }
    return std::string(s_.substr(start, pos_ - start));
  }

  // Caller has verified peek() == '('.
  ParseNode parse_node() {
    ++pos_;  // consume '('
    skip_ws();
    if (at_end()) {
      fail("unbalanced");
    }
    if (peek() == '(' || peek() == ')') {
      fail("empty node");
    }
    ParseNode node;
    node.label = read_token();
    for (;;) {
      skip_ws();
      if (at_end()) {
        fail("unbalanced");
      }
      const char c = peek();
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        node.children.push_back(parse_node());
      } else {
        ParseNode leaf;
        leaf.label = read_token();
        node.children.push_back(std::move(leaf));
      }
    }
    if (node.children.empty()) {
      fail("empty node");
    }
    return node;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> ParseTree::leaves() const {
  std::vector<std::string> out;
  collect_leaves(root, out);
  return out;
}

ParseTree parse_bracketed(std::string_view s) {
  return BracketParser(s).parse();
}

double yngve_sentence(const ParseTree& tree) {
  double sum = 0.0;
  std::size_t leaves = 0;
  accumulate_depths(tree.root, 0.0, sum, leaves);
  if (leaves == 0) {
    throw DataError("parse tree has no leaves");
  }
  return sum / static_cast<double>(leaves);
}

ParseTree right_branching_fallback(std::span<const std::string> tokens) {
  if (tokens.empty()) {
    throw DataError("right_branching_fallback needs at least one token");
  }
  if (tokens.size() == 1) {
    return ParseTree{ParseNode{tokens[0], {}}};
  }
  // Innermost (X wn), then wrap leftwards.
  ParseNode node{"X", {ParseNode{tokens.back(), {}}}};
  for (std::size_t i = tokens.size() - 1; i-- > 1;) {
    ParseNode wrapper{"X", {}};
    wrapper.children.push_back(ParseNode{tokens[i], {}});
    wrapper.children.push_back(std::move(node));
    node = std::move(wrapper);
  }
  ParseNode root{"X", {}};
  root.children.push_back(ParseNode{tokens[0], {}});
  root.children.push_back(std::move(node));
  return ParseTree{std::move(root)};
}

}  // namespace dive
