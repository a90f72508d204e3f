#include <random>

#include <benchmark/benchmark.h>

#include "cssam/corpus.hpp"
#include "cssam/dataset.hpp"
#include "cssam/eval.hpp"
#include "cssam/graph.hpp"
#include "cssam/model.hpp"
#include "cssam/pretrain.hpp"
#include "cssam/synthetic.hpp"
#include "cssam/train.hpp"

namespace {

using namespace cssam;

const std::vector<corpus::CodeDocPair>& corpus200() {
  static const auto pairs = synthetic::generate({200, 1});
  return pairs;
}

struct Featurized {
  dataset::Vocabularies vocabs;
  std::vector<dataset::Example> examples;
};

const Featurized& featurized() {
  static const Featurized f = [] {
    const auto graphs = dataset::build_graphs(corpus200(), {});
    Featurized out;
    out.vocabs = dataset::build_vocabularies(corpus200(), graphs.graphs, 1);
    out.examples = dataset::featurize(corpus200(), graphs.graphs, out.vocabs, {});
    return out;
  }();
  return f;
}

model::ModelConfig model_at(int dim, bool full) {
  const auto& v = featurized().vocabs;
  model::ModelConfig m;
  m.embed_dim = m.hidden = m.d_m = dim;
  m.code_vocab = static_cast<int>(v.code.size());
  m.query_vocab = static_cast<int>(v.query.size());
  m.node_vocab = static_cast<int>(v.node.size());
  if (!full) m.use_cress = m.use_csrg = m.use_attention = false;
  return m;
}

void BM_TokenizeCode(benchmark::State& state) {
  const std::string& code = corpus200().front().code;
  for (auto _ : state) benchmark::DoNotOptimize(corpus::tokenize_code(code));
}
BENCHMARK(BM_TokenizeCode);

void BM_BuildCsrg(benchmark::State& state) {
  const std::string& code = corpus200().front().code;
  for (auto _ : state) {
    const graph::Ast ast = graph::parse_ast(code, "java");
    benchmark::DoNotOptimize(graph::build_csrg(ast, graph::extract_dfg(ast)));
  }
}
BENCHMARK(BM_BuildCsrg);

void BM_RandomWalks(benchmark::State& state) {
  const graph::Ast ast = graph::parse_ast(corpus200().front().code, "java");
  const graph::Csrg g = graph::build_csrg(ast, graph::extract_dfg(ast));
  for (auto _ : state) benchmark::DoNotOptimize(pretrain::random_walks(g, 10, 20, 1));
}
BENCHMARK(BM_RandomWalks);

// Pairwise inference cost, the unit of exhaustive retrieval.
void BM_Score(benchmark::State& state) {
  const auto cfg = model_at(static_cast<int>(state.range(0)), state.range(1) != 0);
  const auto params = model::init_params(cfg, 1);
  const auto& ex = featurized().examples;
  for (auto _ : state) benchmark::DoNotOptimize(model::score(params, cfg, ex[0], ex[1].query_ids));
}
BENCHMARK(BM_Score)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_TrainEpoch200(benchmark::State& state) {
  const auto cfg = model_at(static_cast<int>(state.range(0)), true);
  train::TrainConfig t;
  t.epochs = 1;
  for (auto _ : state) {
    auto params = model::init_params(cfg, 1);
    train::AdamState s;
    train::Trainer trainer(cfg, t, params, s);
    benchmark::DoNotOptimize(trainer.train_epoch(featurized().examples, 1, 1));
  }
}
BENCHMARK(BM_TrainEpoch200)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_Metrics(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<eval::EvalRecord> records;
  for (int i = 0; i < 10000; ++i) records.push_back({"q", 1 + rng() % 1000, 1000});
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval::mrr(records));
    benchmark::DoNotOptimize(eval::ndcg_at_k(records, 50));
  }
}
BENCHMARK(BM_Metrics);

}  // namespace

// The distro libbenchmark_main.a carries LTO bytecode from another gcc, so
// main is defined here against the shared library.
BENCHMARK_MAIN();
