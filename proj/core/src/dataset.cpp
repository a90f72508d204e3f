#include "cssam/dataset.hpp"

#include <unordered_map>

#include "cssam/error.hpp"
#include "cssam/parallel.hpp"

namespace cssam::dataset {

GraphBuild build_graphs(const std::vector<corpus::CodeDocPair>& pairs, const FeatureConfig& cfg, int threads) {
  GraphBuild out;
  out.graphs.resize(pairs.size());
  // Statistics describe the merge itself, so they use untruncated graphs.
  std::vector<std::optional<graph::Ast>> asts(pairs.size());
  std::vector<std::optional<graph::Csrg>> full(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    if (!graph::supports_language(pairs[i].lang)) return;
    try {
      graph::Ast ast = graph::parse_ast(pairs[i].code, pairs[i].lang);
      graph::Csrg g = graph::build_csrg(ast, graph::extract_dfg(ast), cfg.weights);
      out.graphs[i] = graph::truncate_csrg(g, cfg.max_nodes);
      asts[i] = std::move(ast);
      full[i] = std::move(g);
    } catch (const DataError&) {
      out.graphs[i].reset();
    }
  });

  std::vector<graph::Csrg> kept;
  std::vector<graph::Ast> kept_asts;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!out.graphs[i]) {
      out.skipped_ids.push_back(pairs[i].id);
      continue;
    }
    kept.push_back(std::move(*full[i]));
    kept_asts.push_back(std::move(*asts[i]));
  }
  out.stats = graph::csrg_stats(kept, kept_asts);
  out.stats.skipped = out.skipped_ids.size();
  return out;
}

Vocabularies build_vocabularies(const std::vector<corpus::CodeDocPair>& pairs,
                                const std::vector<std::optional<graph::Csrg>>& graphs, std::size_t min_count) {
  Vocabularies v;
  std::tie(v.code, v.query) = corpus::build_vocab(pairs, min_count);
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& g : graphs) {
    if (!g) continue;
    for (const auto& n : g->nodes) ++counts[n.key()];
  }
  v.node = corpus::Vocab::from_counts(counts, 1);
  return v;
}

GraphFeatures graph_features(const graph::Csrg& g, const Vocabularies& vocabs, double self_loop_weight) {
  GraphFeatures f;
  f.graph.nodes = static_cast<int>(g.nodes.size());
  f.graph.self_loop_weight = self_loop_weight;
  for (const auto& n : g.nodes) {
    f.node_ids.push_back(vocabs.node.id(n.key()));
    f.label_ids.push_back(vocabs.code.ids(n.label_tokens));
  }
  for (const auto& e : g.edges) f.graph.edges.push_back(nn::WeightedEdge{e.src, e.dst, e.weight});
  return f;
}

namespace {

std::vector<int> truncated_ids(std::vector<std::string> tokens, const corpus::Vocab& vocab, std::size_t max_len) {
  if (tokens.size() > max_len) tokens.resize(max_len);
  return vocab.ids(tokens);
}

}  // namespace

std::vector<int> query_ids(const std::string& text, const corpus::Vocab& vocab, std::size_t max_len) {
  return truncated_ids(corpus::query_tokens(text), vocab, max_len);
}

std::vector<Example> featurize(const std::vector<corpus::CodeDocPair>& pairs,
                               const std::vector<std::optional<graph::Csrg>>& graphs, const Vocabularies& vocabs,
                               const FeatureConfig& cfg) {
  if (graphs.size() != pairs.size()) throw DataError("featurize: graph and pair lists differ in length");
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!graphs[i] || graphs[i]->nodes.empty()) continue;
    Example ex;
    ex.id = pairs[i].id;
    ex.code = pairs[i].code;
    ex.docstring = pairs[i].docstring;
    ex.code_ids = truncated_ids(corpus::code_tokens(pairs[i].code), vocabs.code, cfg.max_code_len);
    ex.query_ids = query_ids(pairs[i].docstring, vocabs.query, cfg.max_query_len);
    if (ex.code_ids.empty() || ex.query_ids.empty()) continue;
    ex.graph = graph_features(*graphs[i], vocabs, cfg.self_loop_weight);
    out.push_back(std::move(ex));
  }
  return out;
}

Embeddings pretrain_embeddings(const std::vector<corpus::CodeDocPair>& pairs,
                               const std::vector<std::optional<graph::Csrg>>& graphs, const corpus::Vocab& node_vocab,
                               const PretrainConfig& cfg) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    sentences.push_back(corpus::code_tokens(p.code));
    sentences.push_back(corpus::query_tokens(p.docstring));
  }
  Embeddings e;
  e.tokens = pretrain::train_token_embeddings(sentences, cfg.dim, cfg.tokens);

  pretrain::WalkSet all;
  all.params = cfg.walks;
  std::uint64_t graph_seed = cfg.walks.seed;
  for (const auto& g : graphs) {
    if (!g) continue;
    pretrain::WalkParams params = cfg.walks;
    params.seed = graph_seed++;
    const auto local = pretrain::random_walks(pretrain::walk_adjacency(*g), params);
    for (const auto& walk : local.walks) {
      std::vector<int> mapped;
      mapped.reserve(walk.size());
      for (int v : walk) mapped.push_back(node_vocab.id(g->nodes[static_cast<std::size_t>(v)].key()));
      all.walks.push_back(std::move(mapped));
    }
  }
  if (all.walks.empty()) throw DataError("pretrain: no graphs to walk");
  e.nodes = pretrain::train_node_embeddings(all, node_vocab.tokens(), cfg.dim, cfg.nodes);
  return e;
}

}  // namespace cssam::dataset
