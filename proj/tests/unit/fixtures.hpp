#pragma once

// Small featurized corpora shared by the model, training, retrieval and
// evaluation tests.

#include <vector>

#include "cssam/dataset.hpp"
#include "cssam/model.hpp"
#include "cssam/synthetic.hpp"

namespace cssam::testing {

struct TinyData {
  dataset::Vocabularies vocabs;
  std::vector<dataset::Example> examples;
};

inline TinyData tiny_data(std::size_t count, std::uint64_t seed = 1) {
  const auto pairs = synthetic::generate({count, seed});
  dataset::FeatureConfig fc;
  fc.max_code_len = 40;
  fc.max_nodes = 24;
  const auto graphs = dataset::build_graphs(pairs, fc);
  TinyData d;
  d.vocabs = dataset::build_vocabularies(pairs, graphs.graphs, 1);
  d.examples = dataset::featurize(pairs, graphs.graphs, d.vocabs, fc);
  return d;
}

inline model::ModelConfig tiny_model(const dataset::Vocabularies& v, int dim = 8) {
  model::ModelConfig cfg;
  cfg.embed_dim = dim;
  cfg.hidden = dim;
  cfg.d_m = dim;
  cfg.cress_blocks = 2;
  cfg.dropout = 0.0;
  cfg.code_vocab = static_cast<int>(v.code.size());
  cfg.query_vocab = static_cast<int>(v.query.size());
  cfg.node_vocab = static_cast<int>(v.node.size());
  return cfg;
}

}  // namespace cssam::testing
