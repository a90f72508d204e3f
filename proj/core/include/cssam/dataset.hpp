#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cssam/corpus.hpp"
#include "cssam/graph.hpp"
#include "cssam/layers.hpp"
#include "cssam/pretrain.hpp"

namespace cssam::dataset {

struct FeatureConfig {
  std::size_t max_code_len = 200;
  std::size_t max_query_len = 30;
  std::size_t max_nodes = graph::kDefaultMaxNodes;
  graph::EdgeWeights weights;
  double self_loop_weight = 1.0;
  std::size_t min_count = 1;
};

// CSRGs for a list of snippets. Unparseable snippets and unsupported
// languages have no graph and are listed in skipped_ids.
struct GraphBuild {
  std::vector<std::optional<graph::Csrg>> graphs;
  graph::CsrgStats stats;
  std::vector<std::string> skipped_ids;
};

GraphBuild build_graphs(const std::vector<corpus::CodeDocPair>& pairs, const FeatureConfig& cfg, int threads = 1);

struct Vocabularies {
  corpus::Vocab code;
  corpus::Vocab query;
  corpus::Vocab node;  // CSRG node keys "kind:label"
};

Vocabularies build_vocabularies(const std::vector<corpus::CodeDocPair>& pairs,
                                const std::vector<std::optional<graph::Csrg>>& graphs, std::size_t min_count);

struct GraphFeatures {
  std::vector<int> node_ids;                 // node vocabulary ids
  std::vector<std::vector<int>> label_ids;   // code vocabulary ids of each node label
  nn::GatGraph graph;
};

// One record ready for the model: token ids without padding (every position
// is real) and the truncated CSRG.
struct Example {
  std::string id;
  std::string code;
  std::string docstring;
  std::vector<int> code_ids;
  std::vector<int> query_ids;
  GraphFeatures graph;
};

GraphFeatures graph_features(const graph::Csrg& g, const Vocabularies& vocabs, double self_loop_weight);

// Token ids of a query string, truncated to max_len.
std::vector<int> query_ids(const std::string& text, const corpus::Vocab& vocab, std::size_t max_len);

// Records without a graph, or with no code or query tokens, are left out.
std::vector<Example> featurize(const std::vector<corpus::CodeDocPair>& pairs,
                               const std::vector<std::optional<graph::Csrg>>& graphs, const Vocabularies& vocabs,
                               const FeatureConfig& cfg);

struct PretrainConfig {
  int dim = 300;
  pretrain::SkipGramConfig tokens;
  pretrain::SkipGramConfig nodes;
  pretrain::WalkParams walks;
};

struct Embeddings {
  pretrain::EmbeddingTable tokens;  // shared by code and query tokens
  pretrain::EmbeddingTable nodes;   // keyed by node vocabulary tokens
};

// Token vectors come from one skip-gram model over code and docstring
// sentences; node vectors from DeepWalk over every training CSRG.
Embeddings pretrain_embeddings(const std::vector<corpus::CodeDocPair>& pairs,
                               const std::vector<std::optional<graph::Csrg>>& graphs, const corpus::Vocab& node_vocab,
                               const PretrainConfig& cfg);

}  // namespace cssam::dataset
