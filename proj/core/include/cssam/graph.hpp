#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cssam/corpus.hpp"

namespace cssam::graph {

// Leaf kinds produced by the bundled grammars. Definition sites (declarators,
// parameters, assignment targets) get their own kind so that a variable's
// definition and its uses stay distinct nodes after merging.
namespace leaf_kind {
inline constexpr std::string_view kIdentifier = "identifier";
inline constexpr std::string_view kDefinedName = "defined_name";
inline constexpr std::string_view kTypeIdentifier = "type_identifier";
inline constexpr std::string_view kMethodName = "method_name";
inline constexpr std::string_view kFieldName = "field_name";
inline constexpr std::string_view kKeyword = "keyword";
inline constexpr std::string_view kNumber = "number_literal";
inline constexpr std::string_view kString = "string_literal";
inline constexpr std::string_view kChar = "char_literal";
inline constexpr std::string_view kBoolean = "boolean_literal";
inline constexpr std::string_view kNull = "null_literal";
inline constexpr std::string_view kOperator = "operator";
inline constexpr std::string_view kPunctuation = "punctuation";
}  // namespace leaf_kind

struct AstNode {
  int index = 0;
  std::string kind;
  std::string label;  // source text for leaves, kind for interior nodes
  std::size_t span_begin = 0;
  std::size_t span_end = 0;
  bool leaf = false;
  bool operator==(const AstNode&) const = default;
};

// Rooted tree in preorder; edges are (parent, child).
struct Ast {
  std::vector<AstNode> nodes;
  std::vector<std::pair<int, int>> edges;
  int root = 0;

  std::vector<std::vector<int>> children() const;
  std::size_t leaf_count() const;
  bool operator==(const Ast&) const = default;
};

// (definition leaf, use leaf) pairs, both AST leaf indices.
using DfgEdges = std::vector<std::pair<int, int>>;

enum class EdgeType : std::uint8_t { kAst, kDfg };

struct EdgeWeights {
  double ast = 0.4;
  double dfg = 0.6;
};

struct CsrgNode {
  std::string kind;
  std::string label;
  std::vector<std::string> label_tokens;  // tokenize_code(label)
  std::string key() const;                // "kind:label"
  bool operator==(const CsrgNode&) const = default;
};

struct CsrgEdge {
  int src = 0;
  int dst = 0;
  EdgeType type = EdgeType::kAst;
  double weight = 0.0;
  bool operator==(const CsrgEdge&) const = default;
};

struct Csrg {
  std::vector<CsrgNode> nodes;
  std::vector<CsrgEdge> edges;
  int root = 0;
  bool operator==(const Csrg&) const = default;
};

// Supported language tags: "java" and "toy" (a small assignment/expression
// language used by hermetic tests). Throws ConfigError for anything else and
// ParseError (with line/column) on malformed input.
Ast parse_ast(std::string_view source, std::string_view lang);
bool supports_language(std::string_view lang);

// Def-use edges: every identifier use gets an edge from the most recent
// preceding definition of the same name. Right-hand sides are scanned
// before their assignment target.
DfgEdges extract_dfg(const Ast& ast);

Csrg build_csrg(const Ast& ast, const DfgEdges& dfg, const EdgeWeights& weights = {});

// Keeps the max_nodes nodes first reached by breadth-first search from the
// root (neighbors in index order), renumbered in their original order.
Csrg truncate_csrg(const Csrg& g, std::size_t max_nodes);

inline constexpr std::size_t kDefaultMaxNodes = 80;

// Throws InvariantError naming the first violated property.
void validate_csrg(const Csrg& g, const EdgeWeights& weights = {});

struct CsrgStats {
  std::vector<std::size_t> ast_nodes;
  std::vector<std::size_t> csrg_nodes;
  std::vector<std::size_t> dfg_edges;
  double mean_ast_nodes = 0.0;
  double mean_csrg_nodes = 0.0;
  double mean_reduction = 0.0;  // mean of 1 - csrg/ast
  std::size_t total_dfg_edges = 0;
  std::size_t skipped = 0;
};

CsrgStats csrg_stats(const std::vector<Csrg>& graphs, const std::vector<Ast>& asts);
nlohmann::json to_json(const CsrgStats& stats);

nlohmann::json to_json(const Ast& ast);
Ast ast_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Csrg& g);
Csrg csrg_from_json(const nlohmann::json& j);
std::string to_dot(const Csrg& g);

std::string_view to_string(EdgeType t);

}  // namespace cssam::graph
