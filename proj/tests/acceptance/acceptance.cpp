// Acceptance suite. Each criterion prints one line:
//   criterion N [name]: PASS|FAIL  <measurements>
// and the process exits non-zero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "cssam/dataset.hpp"
#include "cssam/error.hpp"
#include "cssam/eval.hpp"
#include "cssam/grad_check.hpp"
#include "cssam/graph.hpp"
#include "cssam/layers.hpp"
#include "cssam/model.hpp"
#include "cssam/synthetic.hpp"
#include "cssam/train.hpp"

namespace fs = std::filesystem;
using namespace cssam;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared settings for the learning criteria: the full model at a width a
// single CPU can train inside the time budgets, optimizer at the defaults.
model::ModelConfig learning_model(const dataset::Vocabularies& v) {
  model::ModelConfig m;
  m.embed_dim = 64;
  m.hidden = 64;
  m.d_m = 64;
  m.code_vocab = static_cast<int>(v.code.size());
  m.query_vocab = static_cast<int>(v.query.size());
  m.node_vocab = static_cast<int>(v.node.size());
  return m;
}

train::TrainConfig learning_train(int epochs) {
  train::TrainConfig t;  // batch 32, lr 1e-4, beta 0.05
  t.epochs = epochs;
  t.seed = 1;
  return t;
}

struct Split {
  dataset::Vocabularies vocabs;
  std::vector<dataset::Example> train;
  std::vector<dataset::Example> test;
};

// Seeded shuffle, the first test_fraction of records held out; vocabularies
// from the training side only.
Split featurized_split(std::size_t count, double test_fraction, std::uint64_t seed) {
  auto pairs = synthetic::generate({count, seed});
  std::mt19937_64 rng(seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(count)));
  const std::vector<corpus::CodeDocPair> test_pairs(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_test));
  const std::vector<corpus::CodeDocPair> train_pairs(pairs.begin() + static_cast<std::ptrdiff_t>(n_test), pairs.end());
  const dataset::FeatureConfig fc;
  const auto train_graphs = dataset::build_graphs(train_pairs, fc);
  const auto test_graphs = dataset::build_graphs(test_pairs, fc);
  Split s;
  s.vocabs = dataset::build_vocabularies(train_pairs, train_graphs.graphs, fc.min_count);
  s.train = dataset::featurize(train_pairs, train_graphs.graphs, s.vocabs, fc);
  s.test = dataset::featurize(test_pairs, test_graphs.graphs, s.vocabs, fc);
  return s;
}

double harmonic_mrr(std::size_t pool) {
  double h = 0.0;
  for (std::size_t r = 1; r <= pool; ++r) h += 1.0 / static_cast<double>(r);
  return h / static_cast<double>(pool);
}

// ------------------------------------------------------------------ 1

nn::ParamStore<double> random_store(const nn::ShapeList& shapes, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n01(0.0, scale);
  nn::ParamStore<double> s;
  for (const auto& [name, shape] : shapes) {
    nn::Mat<double> m(shape.rows, shape.cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
    s.tensors.emplace(name, m);
  }
  return s;
}

nn::Mat<double> random_input(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  nn::Mat<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  constexpr int kSeeds = 20;
  std::map<std::string, double> worst;
  std::size_t checked = 0;
  auto record = [&](const std::string& op, const nn::GradCheckResult& r) {
    worst[op] = std::max(worst[op], r.max_rel_error);
    checked += r.checked;
  };

  // End-to-end triplet loss on a tiny model; beta is large so the hinge is
  // active and the loss is differentiable at the check point.
  const auto pairs = synthetic::generate({6, 3});
  const auto graphs = dataset::build_graphs(pairs, dataset::FeatureConfig{});
  const auto vocabs = dataset::build_vocabularies(pairs, graphs.graphs, 1);
  dataset::FeatureConfig small;
  small.max_code_len = 4;
  small.max_query_len = 4;
  small.max_nodes = 4;
  auto examples = dataset::featurize(pairs, dataset::build_graphs(pairs, small).graphs, vocabs, small);
  model::ModelConfig tiny;
  tiny.embed_dim = tiny.hidden = tiny.d_m = 4;
  tiny.cress_blocks = 2;
  tiny.dropout = 0.0;
  tiny.code_vocab = static_cast<int>(vocabs.code.size());
  tiny.query_vocab = static_cast<int>(vocabs.query.size());
  tiny.node_vocab = static_cast<int>(vocabs.node.size());

  for (int seed = 1; seed <= kSeeds; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    {
      auto s = random_store(nn::lstm_shapes("l", 4, 4), rng, 0.5);
      const auto x = random_input(4, 4, rng);
      record("lstm_encode", nn::grad_check([&](nn::Tape<double>& t) {
               return nn::lstm_encode(t, t.constant(x), {true, true, false, true}, "l");
             }, s));
    }
    {
      auto s = random_store(nn::gat_shapes("g", 4, 4), rng, 0.5);
      const auto x = random_input(4, 4, rng);
      const auto lw = nn::gat_log_weights<double>({4, {{0, 1, 0.4}, {1, 2, 0.4}, {2, 3, 0.6}, {0, 3, 0.6}}, 1.0});
      record("gat_layer", nn::grad_check([&](nn::Tape<double>& t) { return nn::gat_layer(t, t.constant(x), lw, "g"); }, s));
    }
    {
      auto s = random_store(nn::linear_shapes("x", 4, 4), rng, 0.5);
      const auto a = random_input(3, 4, rng), b = random_input(4, 4, rng);
      record("cross_align", nn::grad_check([&](nn::Tape<double>& t) {
               const nn::Aligned o = nn::cross_align(t, t.constant(a), t.constant(b), {true, true, false},
                                                     nn::all_real(4), "x", false);
               return t.concat_rows({o.a, o.b});
             }, s));
    }
    {
      auto s = random_store(nn::cress_block_shapes("c.block1", 2, 2, false), rng, 0.4);
      const auto a = random_input(3, 2, rng), b = random_input(4, 2, rng);
      record("cress_block", nn::grad_check([&](nn::Tape<double>& t) {
               const nn::Aligned o = nn::cress_stack(t, t.constant(a), t.constant(b), {true, true, false},
                                                     nn::all_real(4), "c", 1, {});
               return t.concat_rows({o.a, o.b});
             }, s));
    }
    {
      auto s = random_store(nn::pool_shapes("p", 4), rng, 0.5);
      const auto h = random_input(4, 4, rng);
      record("attention_pool", nn::grad_check([&](nn::Tape<double>& t) {
               return nn::attention_pool(t, t.constant(h), {true, false, true, true}, "p");
             }, s));
    }
    {
      auto s = model::init_params(tiny, static_cast<std::uint64_t>(seed)).cast<double>();
      const auto& ex = examples[static_cast<std::size_t>(seed) % examples.size()];
      const auto& neg = examples[(static_cast<std::size_t>(seed) + 1) % examples.size()];
      record("triplet_loss", nn::grad_check([&](nn::Tape<double>& t) {
               return model::triplet_loss(t, tiny, ex, ex.query_ids, neg.query_ids, 4.0);
             }, s));
    }
  }
  const double secs = seconds_since(t0);
  double max_err = 0.0;
  std::string detail;
  for (const auto& [op, e] : worst) {
    max_err = std::max(max_err, e);
    detail += op + "=" + fmt("%.2e", e) + " ";
  }
  detail += "seeds=" + std::to_string(kSeeds) + " coords=" + std::to_string(checked) + " time=" + fmt("%.1fs", secs);
  return {max_err < 1e-4 && secs < 120.0, detail};
}

// ------------------------------------------------------------------ 2

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double max_diff = 0.0;
  for (int list = 0; list < 1000; ++list) {
    const std::size_t queries = 1 + rng() % 40;
    std::vector<eval::EvalRecord> records;
    std::vector<double> rr, ndcg;
    std::map<std::size_t, std::vector<double>> hits;
    const std::size_t ks[] = {1, 5, 10, 50};
    for (std::size_t q = 0; q < queries; ++q) {
      const std::size_t pool = 1 + rng() % 200;
      const bool missing = rng() % 20 == 0;
      const std::size_t frank = 1 + rng() % pool;
      records.push_back({"q" + std::to_string(q), missing ? std::nullopt : std::optional<std::size_t>(frank), pool});
      // Brute force: walk the ranked positions until the relevant one.
      double recip = 0.0, gain = 0.0;
      for (std::size_t pos = 1; !missing && pos <= pool; ++pos) {
        if (pos == frank) {
          recip = 1.0 / static_cast<double>(pos);
          if (pos <= 50) gain = std::log(2.0) / std::log(static_cast<double>(pos) + 1.0);
        }
      }
      rr.push_back(recip);
      ndcg.push_back(gain);
      for (std::size_t k : ks) hits[k].push_back(!missing && frank <= k ? 1.0 : 0.0);
    }
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
    max_diff = std::max(max_diff, std::abs(eval::mrr(records) - mean(rr)));
    max_diff = std::max(max_diff, std::abs(eval::ndcg_at_k(records, 50) - mean(ndcg)));
    for (std::size_t k : ks) max_diff = std::max(max_diff, std::abs(eval::success_rate_at_k(records, k) - mean(hits[k])));
  }
  const double hand_mrr = eval::mrr({{"a", 1, 10}, {"b", 2, 10}, {"c", 4, 10}});
  const double hand_gain = eval::ndcg_at_k({{"a", 3, 10}}, 10);
  const double secs = seconds_since(t0);
  const bool pass = max_diff <= 1e-12 && std::abs(hand_mrr - 0.58333) < 5e-6 && std::abs(hand_gain - 0.5) < 1e-12 &&
                    secs < 10.0;
  return {pass, "lists=1000 max_diff=" + fmt("%.1e", max_diff) + " MRR([1,2,4])=" + fmt("%.5f", hand_mrr) +
                    " gain(3)=" + fmt("%.4f", hand_gain) + " time=" + fmt("%.2fs", secs)};
}

// ------------------------------------------------------------------ 3

Outcome graph_invariants() {
  const auto t0 = Clock::now();
  const auto pairs = synthetic::generate({500, 3});
  std::size_t ok = 0, dfg_edges = 0;
  std::string first_failure;
  for (const auto& p : pairs) {
    const graph::Ast ast = graph::parse_ast(p.code, p.lang);
    const graph::Csrg g = graph::build_csrg(ast, graph::extract_dfg(ast));
    std::set<std::string> keys;
    bool good = g.nodes.size() <= ast.nodes.size();
    for (const auto& n : g.nodes) good = keys.insert(n.kind + ":" + n.label).second && good;
    for (const auto& e : g.edges) {
      const bool dfg = e.type == graph::EdgeType::kDfg;
      dfg_edges += dfg ? 1 : 0;
      good = good && e.src != e.dst && (e.weight == 0.4 || e.weight == 0.6) && ((e.weight == 0.6) == dfg);
    }
    if (good) {
      ++ok;
    } else if (first_failure.empty()) {
      first_failure = " first_failure=" + p.id;
    }
  }
  const double secs = seconds_since(t0);
  return {ok == pairs.size() && dfg_edges > 0 && secs < 60.0,
          "valid=" + std::to_string(ok) + "/" + std::to_string(pairs.size()) + " dfg_edges=" + std::to_string(dfg_edges) +
              first_failure + " time=" + fmt("%.1fs", secs)};
}

// ------------------------------------------------------------------ 4

Outcome overfit() {
  const auto t0 = Clock::now();
  const Split s = featurized_split(200, 0.0, 4);
  const model::ModelConfig cfg = learning_model(s.vocabs);
  auto params = model::init_params(cfg, 1);
  train::AdamState state;
  const auto log = train::fit(cfg, learning_train(30), s.train, params, state);
  eval::EvalOptions opts;
  opts.full_corpus = true;
  const eval::EvalReport r = eval::evaluate(s.train, opts, &params, &cfg);
  const double secs = seconds_since(t0);
  return {r.sr1 >= 0.9 && secs < 1800.0,
          "pairs=" + std::to_string(s.train.size()) + " epochs=" + std::to_string(log.size()) +
              " loss=" + fmt("%.4f", log.front().mean_loss) + "->" + fmt("%.4f", log.back().mean_loss) +
              " SR@1=" + fmt("%.3f", r.sr1) + " (need >= 0.9) MRR=" + fmt("%.3f", r.mrr) + " time=" + fmt("%.0fs", secs)};
}

// ------------------------------------------------------------------ 5 and 6

constexpr int kCorpusEpochs = 30;

eval::EvalOptions pool200() {
  eval::EvalOptions o;
  o.pool_size = 200;
  o.seed = 5;
  return o;
}

Outcome generalization() {
  const auto t0 = Clock::now();
  const Split s = featurized_split(2000, 0.1, 5);
  const model::ModelConfig cfg = learning_model(s.vocabs);
  auto params = model::init_params(cfg, 1);
  const eval::EvalReport before = eval::evaluate(s.test, pool200(), &params, &cfg);
  train::AdamState state;
  train::fit(cfg, learning_train(kCorpusEpochs), s.train, params, state);
  const eval::EvalReport after = eval::evaluate(s.test, pool200(), &params, &cfg);
  const double chance = harmonic_mrr(200);
  const double secs = seconds_since(t0);
  const bool pass = after.mrr >= 2.0 * before.mrr && after.mrr >= 3.0 * chance && secs < 7200.0;
  return {pass, "train=" + std::to_string(s.train.size()) + " test=" + std::to_string(s.test.size()) +
                    " MRR trained=" + fmt("%.4f", after.mrr) + " random_init=" + fmt("%.4f", before.mrr) +
                    " chance=" + fmt("%.4f", chance) + " time=" + fmt("%.0fs", secs)};
}

Outcome ablation_direction() {
  const auto t0 = Clock::now();
  const Split s = featurized_split(2000, 0.1, 5);
  const auto variants = model::ablation_variants(learning_model(s.vocabs));
  eval::AblationInputs in;
  in.train = learning_train(kCorpusEpochs);
  in.train_data = s.train;
  in.test_data = s.test;
  in.eval = pool200();
  in.init_seed = 1;
  // Rows 0 (Base), 3 (Base+CRESS+CSRG) and 4 (full model).
  const auto rows = eval::ablation_run({variants[0], variants[3], variants[4]}, in);
  const double secs = seconds_since(t0);
  const bool pass = rows[2].mrr >= rows[1].mrr && rows[1].mrr >= rows[0].mrr;
  std::string detail;
  for (const auto& r : rows) detail += r.label + "=" + fmt("%.4f", r.mrr) + " ";
  return {pass, detail + "time=" + fmt("%.0fs", secs)};
}

// ------------------------------------------------------------------ 7

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism(const fs::path& scratch) {
  const auto t0 = Clock::now();
  const fs::path corpus = scratch / "determinism_corpus.jsonl";
  fs::create_directories(scratch);
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "cssam");
    const int code = cli::run(args, sink, sink);
    if (code != 0) throw std::runtime_error("cssam " + args[1] + " exited with " + std::to_string(code));
  };
  run({"synth", "--count", "120", "--out", corpus.string(), "--seed", "7"});
  const std::vector<std::string> model = {"--embed-dim", "16", "--hidden", "16", "--d-m", "16", "--threads", "1", "--seed", "7"};
  std::vector<fs::path> dirs;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path work = scratch / ("determinism_run" + std::to_string(rep));
    fs::remove_all(work);
    dirs.push_back(work);
    const std::vector<std::string> common = {"--workdir", work.string(), "--threads", "1", "--seed", "7"};
    auto with = [&](std::vector<std::string> a, const std::vector<std::string>& more) {
      a.insert(a.end(), more.begin(), more.end());
      return a;
    };
    run(with({"ingest", "--corpus", corpus.string()}, common));
    run(with({"graphs"}, common));
    run(with({"pretrain", "--embed-dim", "16", "--pretrain-epochs", "1"}, common));
    run(with(with({"train", "--epochs", "3", "--batch-size", "16", "--workdir", work.string()}, model), {}));
    run(with({"eval", "--pool-size", "10"}, common));
  }
  const std::vector<std::string> files = {"checkpoint/manifest.json", "checkpoint/tensors.bin", "reports/eval.json",
                                          "reports/eval.txt", "embeddings/tokens.bin"};
  std::string differing;
  for (const auto& f : files) {
    const std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
    if (a.empty() || a != b) differing += " " + f;
  }
  const double secs = seconds_since(t0);
  return {differing.empty(), "compared=" + std::to_string(files.size()) + " files" +
                                 (differing.empty() ? std::string(" all identical") : " differing:" + differing) +
                                 " time=" + fmt("%.0fs", secs)};
}

// ------------------------------------------------------------------ 8

Outcome random_calibration() {
  std::vector<dataset::Example> test(500);
  for (std::size_t i = 0; i < test.size(); ++i) test[i].id = "r" + std::to_string(i);
  eval::EvalOptions opts;
  opts.pool_size = 100;
  opts.scorer = eval::ScorerKind::kRandom;
  opts.seed = 8;
  const eval::EvalReport r = eval::evaluate(test, opts);
  const double expected = harmonic_mrr(100);
  return {std::abs(r.mrr - 0.0519) <= 0.02,
          "queries=500 pool=100 MRR=" + fmt("%.4f", r.mrr) + " closed_form=" + fmt("%.4f", expected) + " tolerance=0.02"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cssam acceptance suite"};
  std::vector<int> selected;
  std::string scratch = (fs::temp_directory_path() / "cssam_acceptance").string();
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 8));
  app.add_option("--scratch", scratch, "Directory for pipeline runs");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8};

  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"gradient fidelity", gradient_fidelity}},
      {2, {"metric oracle", metric_oracle}},
      {3, {"graph invariants", graph_invariants}},
      {4, {"overfit sanity", overfit}},
      {5, {"generalization", generalization}},
      {6, {"ablation direction", ablation_direction}},
      {7, {"determinism", [&] { return determinism(scratch); }}},
      {8, {"random-scorer calibration", random_calibration}},
  };
  bool all = true;
  for (int n : selected) {
    const auto& [name, fn] = criteria.at(n);
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << n << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
