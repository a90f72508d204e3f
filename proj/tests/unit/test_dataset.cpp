#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cssam/dataset.hpp"
#include "cssam/error.hpp"
#include "cssam/synthetic.hpp"

namespace cssam::dataset {
namespace {

TEST(BuildGraphs, SkipsUnparseableAndUnsupported) {
  const std::vector<corpus::CodeDocPair> pairs = {{"ok", "x = a + b", "add two values", "toy"},
                                                  {"bad", "x = (", "broken snippet here", "toy"},
                                                  {"py", "def f(): pass", "a python function", "python"}};
  const GraphBuild b = build_graphs(pairs, {});
  ASSERT_EQ(b.graphs.size(), 3u);
  EXPECT_TRUE(b.graphs[0].has_value());
  EXPECT_FALSE(b.graphs[1].has_value());
  EXPECT_FALSE(b.graphs[2].has_value());
  EXPECT_EQ(b.skipped_ids, (std::vector<std::string>{"bad", "py"}));
  EXPECT_EQ(b.stats.skipped, 2u);
}

TEST(BuildGraphs, ThreadCountDoesNotMatter) {
  const auto pairs = synthetic::generate({30, 2});
  FeatureConfig fc;
  const GraphBuild a = build_graphs(pairs, fc, 1), b = build_graphs(pairs, fc, 4);
  EXPECT_EQ(a.graphs, b.graphs);
}

TEST(BuildGraphs, TruncatesToMaxNodes) {
  FeatureConfig fc;
  fc.max_nodes = 10;
  for (const auto& g : build_graphs(synthetic::generate({10, 1}), fc).graphs) {
    ASSERT_TRUE(g);
    EXPECT_LE(g->nodes.size(), 10u);
  }
}

TEST(Featurize, DropsRecordsWithoutGraph) {
  const std::vector<corpus::CodeDocPair> pairs = {{"ok", "x = a + b", "add two values", "toy"},
                                                  {"bad", "x = (", "broken snippet here", "toy"}};
  const GraphBuild b = build_graphs(pairs, {});
  const Vocabularies v = build_vocabularies(pairs, b.graphs, 1);
  const auto ex = featurize(pairs, b.graphs, v, {});
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].id, "ok");
  EXPECT_EQ(ex[0].graph.graph.nodes, static_cast<int>(ex[0].graph.node_ids.size()));
  EXPECT_EQ(ex[0].graph.label_ids.size(), ex[0].graph.node_ids.size());
}

TEST(Featurize, QueryIdsTruncate) {
  const corpus::Vocab v = corpus::Vocab::from_counts({{"a", 1}, {"b", 1}}, 1);
  const auto ids = query_ids("a b c a", v, 3);
  EXPECT_EQ(ids, (std::vector<int>{v.id("a"), v.id("b"), corpus::kUnkId}));
}

TEST(Featurize, GraphEdgesCarryWeights) {
  const std::vector<corpus::CodeDocPair> pairs = {{"ok", "x = 1; y = x", "copy one into y", "toy"}};
  const GraphBuild b = build_graphs(pairs, {});
  const Vocabularies v = build_vocabularies(pairs, b.graphs, 1);
  const GraphFeatures f = graph_features(*b.graphs[0], v, 1.0);
  ASSERT_EQ(f.graph.edges.size(), b.graphs[0]->edges.size());
  for (std::size_t i = 0; i < f.graph.edges.size(); ++i) EXPECT_DOUBLE_EQ(f.graph.edges[i].weight, b.graphs[0]->edges[i].weight);
  EXPECT_DOUBLE_EQ(f.graph.self_loop_weight, 1.0);
}

TEST(Synthetic, DistinctSeededRecords) {
  const auto a = synthetic::generate({50, 3}), b = synthetic::generate({50, 3});
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].code, b[i].code);
  EXPECT_THROW(synthetic::generate({synthetic::combination_count() + 1, 1}), ConfigError);
}

TEST(PretrainEmbeddings, CoversVocabularies) {
  const auto pairs = synthetic::generate({20, 1});
  const GraphBuild b = build_graphs(pairs, {});
  const Vocabularies v = build_vocabularies(pairs, b.graphs, 1);
  PretrainConfig pc;
  pc.dim = 8;
  pc.tokens.epochs = 1;
  pc.nodes.epochs = 1;
  pc.walks.gamma = 2;
  pc.walks.t = 5;
  const Embeddings e = pretrain_embeddings(pairs, b.graphs, v.node, pc);
  EXPECT_EQ(e.tokens.dim(), 8);
  EXPECT_EQ(e.nodes.dim(), 8);
  EXPECT_TRUE(e.tokens.contains(v.code.token(2)));
  EXPECT_TRUE(e.tokens.contains(v.query.token(2)));
  EXPECT_EQ(e.nodes.size(), v.node.size());
}

}  // namespace
}  // namespace cssam::dataset
