#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cssam/graph.hpp"

namespace cssam::graph::detail {

// Owning tree built by the recursive-descent parsers before flattening.
struct ParseNode {
  std::string kind;
  std::string label;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool leaf = false;
  std::vector<ParseNode> children;

  static ParseNode make_leaf(std::string_view kind, std::string text, std::size_t begin,
                             std::size_t end) {
    return ParseNode{std::string(kind), std::move(text), begin, end, true, {}};
  }
  static ParseNode make_inner(std::string_view kind) {
    return ParseNode{std::string(kind), std::string(kind), 0, 0, false, {}};
  }
  void add(ParseNode child) {
    if (children.empty()) begin = child.begin;
    end = child.end;
    children.push_back(std::move(child));
  }
};

Ast flatten(const ParseNode& root);

ParseNode parse_java(std::string_view source);
ParseNode parse_toy(std::string_view source);

// 1-based line/column of a byte offset.
std::pair<std::size_t, std::size_t> line_col(std::string_view source, std::size_t offset);

}  // namespace cssam::graph::detail
