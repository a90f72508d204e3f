#include "cssam/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cssam/error.hpp"
#include "parse_tree.hpp"

namespace cssam::graph {
namespace detail {

std::pair<std::size_t, std::size_t> line_col(std::string_view source, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < source.size(); ++i) {
    if (source[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

namespace {
void flatten_into(const ParseNode& node, int parent, Ast& ast) {
  const int index = static_cast<int>(ast.nodes.size());
  ast.nodes.push_back(AstNode{index, node.kind, node.leaf ? node.label : node.kind, node.begin,
                              node.end, node.leaf});
  if (parent >= 0) ast.edges.emplace_back(parent, index);
  for (const auto& child : node.children) flatten_into(child, index, ast);
}
}  // namespace

Ast flatten(const ParseNode& root) {
  Ast ast;
  flatten_into(root, -1, ast);
  ast.root = 0;
  return ast;
}

}  // namespace detail

std::vector<std::vector<int>> Ast::children() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (const auto& [p, c] : edges) out[static_cast<std::size_t>(p)].push_back(c);
  return out;
}

std::size_t Ast::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const AstNode& n) { return n.leaf; }));
}

bool supports_language(std::string_view lang) { return lang == "java" || lang == "toy"; }

Ast parse_ast(std::string_view source, std::string_view lang) {
  if (lang == "java") return detail::flatten(detail::parse_java(source));
  if (lang == "toy") return detail::flatten(detail::parse_toy(source));
  throw ConfigError("unsupported language: " + std::string(lang));
}

// ---------------------------------------------------------------------------
// Data flow

namespace {

class DefUseWalker {
 public:
  explicit DefUseWalker(const Ast& ast) : ast_(ast), children_(ast.children()) {}

  DfgEdges run() {
    if (!ast_.nodes.empty()) visit(ast_.root);
    return std::move(edges_);
  }

 private:
  bool is_leaf_of(int n, std::string_view kind) const {
    const AstNode& node = ast_.nodes[static_cast<std::size_t>(n)];
    return node.leaf && node.kind == kind;
  }

  void use(int n) {
    auto it = defs_.find(ast_.nodes[static_cast<std::size_t>(n)].label);
    if (it != defs_.end()) edges_.emplace_back(it->second, n);
  }
  void define(int n) { defs_[ast_.nodes[static_cast<std::size_t>(n)].label] = n; }

  void visit(int n) {
    const AstNode& node = ast_.nodes[static_cast<std::size_t>(n)];
    if (node.leaf) {
      if (node.kind == leaf_kind::kIdentifier) use(n);
      if (node.kind == leaf_kind::kDefinedName) define(n);
      return;
    }
    const auto& kids = children_[static_cast<std::size_t>(n)];
    if ((node.kind == "assignment_expression" || node.kind == "assignment") && kids.size() >= 3) {
      for (std::size_t k = 2; k < kids.size(); ++k) visit(kids[k]);
      const int target = kids[0];
      if (is_leaf_of(target, leaf_kind::kDefinedName)) {
        if (ast_.nodes[static_cast<std::size_t>(kids[1])].label != "=") use(target);
        define(target);
      } else {
        visit(target);
      }
      return;
    }
    if (node.kind == "variable_declarator" && !kids.empty() &&
        is_leaf_of(kids[0], leaf_kind::kDefinedName)) {
      for (std::size_t k = 1; k < kids.size(); ++k) visit(kids[k]);
      define(kids[0]);
      return;
    }
    if (node.kind == "update_expression") {
      for (int k : kids) {
        if (is_leaf_of(k, leaf_kind::kDefinedName)) {
          use(k);
          define(k);
        } else {
          visit(k);
        }
      }
      return;
    }
    for (int k : kids) visit(k);
  }

  const Ast& ast_;
  std::vector<std::vector<int>> children_;
  std::unordered_map<std::string, int> defs_;
  DfgEdges edges_;
};

}  // namespace

DfgEdges extract_dfg(const Ast& ast) { return DefUseWalker(ast).run(); }

// ---------------------------------------------------------------------------
// CSRG

std::string CsrgNode::key() const { return kind + ":" + label; }

std::string_view to_string(EdgeType t) { return t == EdgeType::kAst ? "AST" : "DFG"; }

Csrg build_csrg(const Ast& ast, const DfgEdges& dfg, const EdgeWeights& weights) {
  Csrg g;
  if (ast.nodes.empty()) throw DataError("build_csrg: empty AST");

  std::map<std::pair<std::string, std::string>, int> by_key;
  std::vector<int> node_of(ast.nodes.size());
  for (const auto& n : ast.nodes) {
    auto [it, inserted] = by_key.emplace(std::pair{n.kind, n.label}, static_cast<int>(g.nodes.size()));
    if (inserted) g.nodes.push_back(CsrgNode{n.kind, n.label, corpus::code_tokens(n.label)});
    node_of[static_cast<std::size_t>(n.index)] = it->second;
  }
  g.root = node_of[static_cast<std::size_t>(ast.root)];

  std::set<std::tuple<int, int, EdgeType>> seen;
  auto add_edge = [&](int u, int v, EdgeType type) {
    if (u == v) return;
    if (!seen.emplace(u, v, type).second) return;
    g.edges.push_back(CsrgEdge{u, v, type, type == EdgeType::kAst ? weights.ast : weights.dfg});
  };
  for (const auto& [p, c] : ast.edges) {
    add_edge(node_of[static_cast<std::size_t>(p)], node_of[static_cast<std::size_t>(c)], EdgeType::kAst);
  }

  if (!dfg.empty()) {
    // Locate every DFG endpoint among the leaves reachable from the root.
    std::vector<char> reachable_leaf(ast.nodes.size(), 0);
    const auto kids = ast.children();
    std::vector<int> stack{ast.root};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      if (ast.nodes[static_cast<std::size_t>(n)].leaf) reachable_leaf[static_cast<std::size_t>(n)] = 1;
      for (auto it = kids[static_cast<std::size_t>(n)].rbegin(); it != kids[static_cast<std::size_t>(n)].rend(); ++it) {
        stack.push_back(*it);
      }
    }
    auto check = [&](int leaf) {
      if (leaf < 0 || static_cast<std::size_t>(leaf) >= ast.nodes.size() ||
          !reachable_leaf[static_cast<std::size_t>(leaf)]) {
        throw InvariantError("build_csrg: DFG endpoint " + std::to_string(leaf) +
                             " is not a leaf of the AST");
      }
    };
    for (const auto& [from, to] : dfg) {
      check(from);
      check(to);
      add_edge(node_of[static_cast<std::size_t>(from)], node_of[static_cast<std::size_t>(to)], EdgeType::kDfg);
    }
  }
  return g;
}

Csrg truncate_csrg(const Csrg& g, std::size_t max_nodes) {
  if (max_nodes < 1) throw ConfigError("truncate_csrg: max_nodes must be >= 1");
  if (g.nodes.size() <= max_nodes) return g;

  std::vector<std::vector<int>> out(g.nodes.size());
  for (const auto& e : g.edges) out[static_cast<std::size_t>(e.src)].push_back(e.dst);
  for (auto& nbrs : out) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  std::vector<char> visited(g.nodes.size(), 0);
  std::vector<int> order;
  order.reserve(max_nodes);
  auto bfs_from = [&](int start) {
    std::deque<int> queue{start};
    visited[static_cast<std::size_t>(start)] = 1;
    while (!queue.empty() && order.size() < max_nodes) {
      const int n = queue.front();
      queue.pop_front();
      order.push_back(n);
      for (int m : out[static_cast<std::size_t>(n)]) {
        if (!visited[static_cast<std::size_t>(m)]) {
          visited[static_cast<std::size_t>(m)] = 1;
          queue.push_back(m);
        }
      }
    }
  };
  bfs_from(g.root);
  // Nodes unreachable from the root are the farthest; take them by index.
  for (std::size_t i = 0; i < g.nodes.size() && order.size() < max_nodes; ++i) {
    if (!visited[i]) bfs_from(static_cast<int>(i));
  }

  std::sort(order.begin(), order.end());
  std::vector<int> remap(g.nodes.size(), -1);
  Csrg t;
  for (int old : order) {
    remap[static_cast<std::size_t>(old)] = static_cast<int>(t.nodes.size());
    t.nodes.push_back(g.nodes[static_cast<std::size_t>(old)]);
  }
  for (const auto& e : g.edges) {
    const int u = remap[static_cast<std::size_t>(e.src)];
    const int v = remap[static_cast<std::size_t>(e.dst)];
    if (u >= 0 && v >= 0) t.edges.push_back(CsrgEdge{u, v, e.type, e.weight});
  }
  t.root = remap[static_cast<std::size_t>(g.root)];
  return t;
}

void validate_csrg(const Csrg& g, const EdgeWeights& weights) {
  const auto n = static_cast<int>(g.nodes.size());
  if (n == 0) throw InvariantError("csrg has no nodes");
  if (g.root < 0 || g.root >= n) throw InvariantError("csrg root out of range");
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& node : g.nodes) {
    if (!keys.emplace(node.kind, node.label).second) {
      throw InvariantError("duplicate csrg node key " + node.key());
    }
  }
  for (const auto& e : g.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) throw InvariantError("csrg edge endpoint out of range");
    if (e.src == e.dst) throw InvariantError("csrg self-loop at " + std::to_string(e.src));
    const double expected = e.type == EdgeType::kAst ? weights.ast : weights.dfg;
    if (e.weight != expected) throw InvariantError("csrg edge weight does not match its type");
  }
}

CsrgStats csrg_stats(const std::vector<Csrg>& graphs, const std::vector<Ast>& asts) {
  if (graphs.size() != asts.size()) throw DataError("csrg_stats: graph and AST lists differ in length");
  CsrgStats s;
  double reduction = 0.0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const std::size_t a = asts[i].nodes.size();
    const std::size_t c = graphs[i].nodes.size();
    const auto dfg = static_cast<std::size_t>(std::count_if(
        graphs[i].edges.begin(), graphs[i].edges.end(), [](const CsrgEdge& e) { return e.type == EdgeType::kDfg; }));
    s.ast_nodes.push_back(a);
    s.csrg_nodes.push_back(c);
    s.dfg_edges.push_back(dfg);
    s.mean_ast_nodes += static_cast<double>(a);
    s.mean_csrg_nodes += static_cast<double>(c);
    s.total_dfg_edges += dfg;
    reduction += a == 0 ? 0.0 : 1.0 - static_cast<double>(c) / static_cast<double>(a);
  }
  if (!graphs.empty()) {
    const auto count = static_cast<double>(graphs.size());
    s.mean_ast_nodes /= count;
    s.mean_csrg_nodes /= count;
    s.mean_reduction = reduction / count;
  }
  return s;
}

nlohmann::json to_json(const CsrgStats& s) {
  return {{"snippets", s.ast_nodes.size()},
          {"skipped", s.skipped},
          {"mean_ast_nodes", s.mean_ast_nodes},
          {"mean_csrg_nodes", s.mean_csrg_nodes},
          {"mean_reduction", s.mean_reduction},
          {"total_dfg_edges", s.total_dfg_edges},
          {"ast_nodes", s.ast_nodes},
          {"csrg_nodes", s.csrg_nodes},
          {"dfg_edges", s.dfg_edges}};
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const Ast& ast) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : ast.nodes) {
    nodes.push_back({{"index", n.index},
                     {"kind", n.kind},
                     {"label", n.label},
                     {"span", {n.span_begin, n.span_end}},
                     {"leaf", n.leaf}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [p, c] : ast.edges) edges.push_back({p, c});
  return {{"nodes", nodes}, {"edges", edges}, {"root", ast.root}};
}

Ast ast_from_json(const nlohmann::json& j) {
  try {
    Ast ast;
    for (const auto& n : j.at("nodes")) {
      ast.nodes.push_back(AstNode{n.at("index").get<int>(), n.at("kind").get<std::string>(),
                                  n.at("label").get<std::string>(), n.at("span").at(0).get<std::size_t>(),
                                  n.at("span").at(1).get<std::size_t>(), n.at("leaf").get<bool>()});
    }
    for (const auto& e : j.at("edges")) ast.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    ast.root = j.at("root").get<int>();
    return ast;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed AST JSON: ") + e.what());
  }
}

nlohmann::json to_json(const Csrg& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"kind", n.kind}, {"label", n.label}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"type", to_string(e.type)}, {"weight", e.weight}});
  }
  return {{"nodes", nodes}, {"edges", edges}, {"root", g.root}};
}

Csrg csrg_from_json(const nlohmann::json& j) {
  try {
    Csrg g;
    for (const auto& n : j.at("nodes")) {
      CsrgNode node{n.at("kind").get<std::string>(), n.at("label").get<std::string>(), {}};
      node.label_tokens = corpus::code_tokens(node.label);
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : j.at("edges")) {
      const auto type = e.at("type").get<std::string>();
      if (type != "AST" && type != "DFG") throw DataError("unknown CSRG edge type " + type);
      g.edges.push_back(CsrgEdge{e.at("src").get<int>(), e.at("dst").get<int>(),
                                 type == "AST" ? EdgeType::kAst : EdgeType::kDfg,
                                 e.at("weight").get<double>()});
    }
    g.root = j.at("root").get<int>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed CSRG JSON: ") + e.what());
  }
}

std::string to_dot(const Csrg& g) {
  std::ostringstream out;
  out << "digraph csrg {\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    nlohmann::json label = g.nodes[i].kind + "\n" + g.nodes[i].label;
    out << "  n" << i << " [label=" << label.dump() << "];\n";
  }
  for (const auto& e : g.edges) {
    out << "  n" << e.src << " -> n" << e.dst << " [label=\"" << e.weight << "\"";
    if (e.type == EdgeType::kDfg) out << ", style=dashed, color=blue";
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace cssam::graph
