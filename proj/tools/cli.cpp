#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "cssam/error.hpp"
#include "cssam/parallel.hpp"
#include "cssam/retrieval.hpp"
#include "cssam/synthetic.hpp"

namespace cssam::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config IO

// Object reader that rejects keys outside an allow-list.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be a JSON object");
    for (const auto& [key, value] : j_.items()) {
      if (allowed.count(key) == 0) throw ConfigError("unknown config key: " + qualified(key));
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& field) const {
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key " + qualified(key) + " has the wrong type");
    }
  }

  void get_path(const std::string& key, fs::path& field) const {
    std::string s;
    get(key, s);
    if (has(key)) field = s;
  }

 private:
  std::string label() const { return path_.empty() ? "config" : "config section " + path_; }

  const json& j_;
  std::string path_;
};

retrieval::Mode parse_mode(const EvalSettings& e) {
  if (e.mode == "exhaustive") return retrieval::Mode::exhaustive();
  if (e.mode == "two_stage") return retrieval::Mode::two_stage(e.top_n);
  throw ConfigError("unknown retrieval mode '" + e.mode + "' (expected exhaustive or two_stage)");
}

// ---------------------------------------------------------------- workdir

struct Workspace {
  fs::path root;

  fs::path split(const std::string& name) const { return root / "dataset" / (name + ".jsonl"); }
  fs::path summary() const { return root / "dataset" / "summary.json"; }
  fs::path vocab(const std::string& name) const { return root / "vocab" / (name + ".json"); }
  fs::path graphs(const std::string& name) const { return root / "graphs" / (name + ".jsonl"); }
  fs::path graph_stats() const { return root / "graphs" / "stats.json"; }
  fs::path embeddings(const std::string& name) const { return root / "embeddings" / name; }
  fs::path train_log() const { return root / "train_log.jsonl"; }
  fs::path report(const std::string& name) const { return root / "reports" / name; }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) throw IoError("missing " + path.string() + " (run '" + hint + "' first)");
}

std::vector<corpus::CodeDocPair> load_split(const Workspace& ws, const std::string& name) {
  require_file(ws.split(name), "cssam ingest");
  return corpus::load_pairs(ws.split(name), 0).pairs;
}

std::vector<std::optional<graph::Csrg>> load_graphs(const Workspace& ws, const std::string& name,
                                                    const std::vector<corpus::CodeDocPair>& pairs) {
  require_file(ws.graphs(name), "cssam graphs");
  std::ifstream in(ws.graphs(name));
  std::vector<std::optional<graph::Csrg>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("malformed graph record in " + ws.graphs(name).string() + ": " + e.what());
    }
    const std::size_t i = out.size();
    if (i >= pairs.size() || j.at("id").get<std::string>() != pairs[i].id) {
      throw DataError(ws.graphs(name).string() + " is out of step with the dataset; rerun 'cssam graphs'");
    }
    if (j.contains("csrg")) {
      out.emplace_back(graph::csrg_from_json(j.at("csrg")));
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  if (out.size() != pairs.size()) {
    throw DataError(ws.graphs(name).string() + " is out of step with the dataset; rerun 'cssam graphs'");
  }
  return out;
}

dataset::Vocabularies load_vocabs(const Workspace& ws) {
  require_file(ws.vocab("code"), "cssam ingest");
  require_file(ws.vocab("node"), "cssam graphs");
  return {corpus::Vocab::load(ws.vocab("code")), corpus::Vocab::load(ws.vocab("query")),
          corpus::Vocab::load(ws.vocab("node"))};
}

std::vector<dataset::Example> load_examples(const Workspace& ws, const std::string& name,
                                            const dataset::Vocabularies& vocabs, const RunConfig& cfg) {
  const auto pairs = load_split(ws, name);
  const auto graphs = load_graphs(ws, name, pairs);
  return dataset::featurize(pairs, graphs, vocabs, cfg.features);
}

bool have_embeddings(const Workspace& ws) {
  return fs::exists(ws.embeddings("tokens").string() + ".json") &&
         fs::exists(ws.embeddings("nodes").string() + ".json");
}

dataset::Embeddings load_pretrained(const Workspace& ws) {
  return {pretrain::EmbeddingTable::load(ws.embeddings("tokens")), pretrain::EmbeddingTable::load(ws.embeddings("nodes"))};
}

model::ModelConfig sized_model(const RunConfig& cfg, const dataset::Vocabularies& vocabs) {
  model::ModelConfig m = cfg.model;
  m.code_vocab = static_cast<int>(vocabs.code.size());
  m.query_vocab = static_cast<int>(vocabs.query.size());
  m.node_vocab = static_cast<int>(vocabs.node.size());
  model::validate(m);
  return m;
}

train::Checkpoint load_checkpoint_or_fail(const RunConfig& cfg) {
  if (!fs::exists(cfg.checkpoint_dir() / "manifest.json")) {
    throw CheckpointError("no checkpoint at " + cfg.checkpoint_dir().string() + " (run 'cssam train' first)");
  }
  return train::load_checkpoint(cfg.checkpoint_dir());
}

eval::EvalOptions eval_options(const RunConfig& cfg) {
  eval::EvalOptions o;
  o.pool_size = cfg.eval.pool_size;
  o.full_corpus = cfg.eval.full_corpus;
  o.mode = parse_mode(cfg.eval);
  o.seed = cfg.seed;
  o.scorer = eval::scorer_from_string(cfg.eval.scorer);
  o.threads = cfg.threads;
  return o;
}

json report_json(const eval::EvalReport& r, const std::vector<std::size_t>& ks) {
  json j = eval::to_json(r);
  json sr = json::object();
  for (std::size_t k : ks) sr[std::to_string(k)] = eval::success_rate_at_k(r.records, k);
  j["success_rate_at_k"] = sr;
  return j;
}

// ---------------------------------------------------------------- commands

using Logger = std::shared_ptr<spdlog::logger>;

struct Context {
  RunConfig cfg;
  Workspace ws;
  Logger log;
  std::ostream& out;
  std::istream& in;
};

int cmd_synth(Context& c, std::size_t count, const fs::path& path) {
  const auto pairs = synthetic::generate({count, c.cfg.seed});
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  corpus::save_pairs(path, pairs);
  c.log->info("wrote {} synthetic pairs to {}", pairs.size(), path.string());
  c.out << json{{"pairs", pairs.size()}, {"path", path.string()}}.dump() << '\n';
  return kOk;
}

int cmd_ingest(Context& c) {
  if (c.cfg.corpus.empty()) throw ConfigError("ingest needs a corpus path (--corpus or \"corpus\" in the config)");
  const corpus::LoadResult loaded = corpus::load_pairs(c.cfg.corpus);
  if (loaded.pairs.size() < 2) throw DataError("corpus has fewer than two usable pairs");
  std::set<std::string> ids;
  for (const auto& p : loaded.pairs) {
    if (!ids.insert(p.id).second) throw DataError("duplicate record id " + p.id);
  }

  std::vector<std::size_t> order(loaded.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(c.cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(std::llround(c.cfg.test_fraction * static_cast<double>(order.size())));
  if (c.cfg.test_fraction > 0.0) n_test = std::clamp<std::size_t>(n_test, 1, order.size() - 1);
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<corpus::CodeDocPair> out;
    for (std::size_t i : idx) out.push_back(loaded.pairs[i]);
    return out;
  };
  const auto train_pairs = pick(train_idx);
  const auto test_pairs = pick(test_idx);

  fs::create_directories(c.ws.root / "dataset");
  corpus::save_pairs(c.ws.split("train"), train_pairs);
  corpus::save_pairs(c.ws.split("test"), test_pairs);
  const auto [code_vocab, query_vocab] = corpus::build_vocab(train_pairs, c.cfg.features.min_count);
  fs::create_directories(c.ws.root / "vocab");
  code_vocab.save(c.ws.vocab("code"));
  query_vocab.save(c.ws.vocab("query"));
  const json summary = {{"pairs", loaded.pairs.size()},     {"dropped", loaded.dropped},
                        {"train", train_pairs.size()},      {"test", test_pairs.size()},
                        {"code_vocab", code_vocab.size()},  {"query_vocab", query_vocab.size()},
                        {"seed", c.cfg.seed},               {"test_fraction", c.cfg.test_fraction}};
  write_json(c.ws.summary(), summary);
  c.log->info("ingested {} pairs ({} dropped): {} train, {} test", loaded.pairs.size(), loaded.dropped,
              train_pairs.size(), test_pairs.size());
  c.out << summary.dump() << '\n';
  return kOk;
}

int cmd_graphs(Context& c) {
  json stats_out = json::object();
  std::vector<std::optional<graph::Csrg>> train_graphs;
  std::vector<corpus::CodeDocPair> train_pairs;
  for (const std::string split : {"train", "test"}) {
    const auto pairs = load_split(c.ws, split);
    dataset::GraphBuild built = dataset::build_graphs(pairs, c.cfg.features, c.cfg.threads);
    std::ostringstream lines;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      json rec = {{"id", pairs[i].id}};
      if (built.graphs[i]) {
        graph::validate_csrg(*built.graphs[i], c.cfg.features.weights);
        rec["csrg"] = graph::to_json(*built.graphs[i]);
      } else {
        rec["skipped"] = true;
      }
      lines << rec.dump() << '\n';
    }
    write_text(c.ws.graphs(split), lines.str());
    for (const auto& id : built.skipped_ids) c.log->warn("{}: skipped unparseable snippet {}", split, id);
    json s = graph::to_json(built.stats);
    s["skipped_ids"] = built.skipped_ids;
    stats_out[split] = s;
    c.log->info("{}: {} graphs, {} skipped, mean AST nodes {:.1f}, mean CSRG nodes {:.1f}", split,
                pairs.size() - built.skipped_ids.size(), built.skipped_ids.size(), built.stats.mean_ast_nodes,
                built.stats.mean_csrg_nodes);
    if (split == "train") {
      train_graphs = std::move(built.graphs);
      train_pairs = pairs;
    }
  }
  const dataset::Vocabularies vocabs =
      dataset::build_vocabularies(train_pairs, train_graphs, c.cfg.features.min_count);
  vocabs.node.save(c.ws.vocab("node"));
  write_json(c.ws.graph_stats(), stats_out);
  json brief = json::object();
  for (const std::string split : {"train", "test"}) {
    brief[split] = {{"skipped", stats_out[split]["skipped"]},
                    {"mean_ast_nodes", stats_out[split]["mean_ast_nodes"]},
                    {"mean_csrg_nodes", stats_out[split]["mean_csrg_nodes"]}};
  }
  brief["node_vocab"] = vocabs.node.size();
  c.out << brief.dump() << '\n';
  return kOk;
}

int cmd_pretrain(Context& c) {
  const auto pairs = load_split(c.ws, "train");
  const auto graphs = load_graphs(c.ws, "train", pairs);
  const dataset::Vocabularies vocabs = load_vocabs(c.ws);
  dataset::PretrainConfig pc = c.cfg.pretrain;
  pc.dim = c.cfg.model.embed_dim;
  const dataset::Embeddings emb = dataset::pretrain_embeddings(pairs, graphs, vocabs.node, pc);
  emb.tokens.save(c.ws.embeddings("tokens"));
  emb.nodes.save(c.ws.embeddings("nodes"));
  c.log->info("pretrained {} token and {} node vectors of dim {}", emb.tokens.size(), emb.nodes.size(), pc.dim);
  c.out << json{{"tokens", emb.tokens.size()}, {"nodes", emb.nodes.size()}, {"dim", pc.dim}}.dump() << '\n';
  return kOk;
}

int cmd_train(Context& c, bool resume) {
  const dataset::Vocabularies vocabs = load_vocabs(c.ws);
  std::vector<dataset::Example> data = load_examples(c.ws, "train", vocabs, c.cfg);
  std::vector<dataset::Example> valid;
  if (c.cfg.train.patience > 0) {
    const auto n = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(c.cfg.validation_fraction * static_cast<double>(data.size()))));
    if (n + 2 > data.size()) throw DataError("too few training records to hold out a validation slice");
    valid.assign(std::make_move_iterator(data.end() - static_cast<std::ptrdiff_t>(n)),
                 std::make_move_iterator(data.end()));
    data.resize(data.size() - n);
  }

  train::Checkpoint ckpt;
  int first_epoch = 1;
  if (resume && fs::exists(c.cfg.checkpoint_dir() / "manifest.json")) {
    ckpt = train::load_checkpoint(c.cfg.checkpoint_dir());
    const model::ModelConfig wanted = sized_model(c.cfg, vocabs);
    if (!(ckpt.model == wanted)) throw CheckpointError("checkpoint model config differs from the requested one");
    first_epoch = ckpt.epoch + 1;
    c.log->info("resuming from epoch {}", ckpt.epoch);
  } else {
    ckpt.model = sized_model(c.cfg, vocabs);
    ckpt.params = model::init_params(ckpt.model, c.cfg.seed);
    if (c.cfg.use_pretrained && have_embeddings(c.ws)) {
      model::load_embeddings(ckpt.params, ckpt.model, vocabs, load_pretrained(c.ws));
      c.log->info("loaded pretrained embeddings");
    } else if (c.cfg.use_pretrained) {
      c.log->warn("no pretrained embeddings in {}; using random initialization", c.ws.root.string());
    }
  }
  ckpt.train = c.cfg.train;

  std::ofstream log_file(c.ws.train_log(), resume ? std::ios::app : std::ios::trunc);
  if (!log_file) throw IoError("cannot write " + c.ws.train_log().string());
  train::Validator validator;
  if (!valid.empty()) {
    validator = [&] {
      eval::EvalOptions o = eval_options(c.cfg);
      o.full_corpus = false;
      o.pool_size = std::min(o.pool_size, valid.size());
      o.scorer = eval::ScorerKind::kModel;
      return eval::evaluate(valid, o, &ckpt.params, &ckpt.model).mrr;
    };
  }
  const auto history = train::fit(
      ckpt.model, ckpt.train, data, ckpt.params, ckpt.adam, first_epoch, c.cfg.threads,
      [&](const train::EpochMetrics& m) {
        log_file << train::to_json(m).dump() << '\n' << std::flush;
        c.log->info("epoch {}: loss {:.5f}, active {:.3f}, {:.1f}s", m.epoch, m.mean_loss, m.active_fraction,
                    m.wall_seconds);
        ckpt.epoch = m.epoch;
        train::save_checkpoint(ckpt, c.cfg.checkpoint_dir());
      },
      validator);
  if (!history.empty()) {
    ckpt.epoch = history.back().epoch;
    train::save_checkpoint(ckpt, c.cfg.checkpoint_dir());
  }
  const json summary = {{"epochs_run", history.size()},
                        {"last_epoch", ckpt.epoch},
                        {"final_loss", history.empty() ? json(nullptr) : json(history.back().mean_loss)},
                        {"checkpoint", c.cfg.checkpoint_dir().string()}};
  c.out << summary.dump() << '\n';
  return kOk;
}

int cmd_search(Context& c, const std::vector<std::string>& words, const std::string& format) {
  const train::Checkpoint ckpt = load_checkpoint_or_fail(c.cfg);
  const dataset::Vocabularies vocabs = load_vocabs(c.ws);
  std::vector<dataset::Example> all = load_examples(c.ws, "train", vocabs, c.cfg);
  for (auto& e : load_examples(c.ws, "test", vocabs, c.cfg)) all.push_back(std::move(e));
  std::vector<const dataset::Example*> pool;
  for (const auto& e : all) pool.push_back(&e);
  const retrieval::Mode mode = parse_mode(c.cfg.eval);

  auto answer = [&](const std::string& text) {
    const std::vector<int> ids = dataset::query_ids(text, vocabs.query, c.cfg.features.max_query_len);
    if (ids.empty()) {
      c.log->warn("query '{}' has no tokens", text);
      return;
    }
    const auto ranked = retrieval::top_k(
        retrieval::score_all({"query", ids, std::nullopt}, pool, ckpt.params, ckpt.model, mode, c.cfg.threads),
        c.cfg.eval.top_k);
    if (format == "text") {
      for (std::size_t i = 0; i < ranked.ranked.size(); ++i) {
        char score[32];
        std::snprintf(score, sizeof score, "%.6f", ranked.ranked[i].score);
        c.out << (i + 1) << '\t' << score << '\t' << ranked.ranked[i].id << '\n';
      }
    } else {
      c.out << retrieval::to_json(text, ranked, pool).dump() << '\n';
    }
    c.out.flush();
  };

  if (!words.empty()) {
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    answer(text);
  } else {
    std::string line;
    while (std::getline(c.in, line)) {
      if (!line.empty()) answer(line);
    }
  }
  return kOk;
}

int cmd_eval(Context& c) {
  const eval::EvalOptions opts = eval_options(c.cfg);
  const dataset::Vocabularies vocabs = load_vocabs(c.ws);
  const auto test = load_examples(c.ws, "test", vocabs, c.cfg);
  eval::EvalReport report;
  if (opts.scorer == eval::ScorerKind::kModel) {
    const train::Checkpoint ckpt = load_checkpoint_or_fail(c.cfg);
    report = eval::evaluate(test, opts, &ckpt.params, &ckpt.model);
  } else {
    report = eval::evaluate(test, opts);
  }
  write_json(c.ws.report("eval.json"), report_json(report, c.cfg.eval.k));
  const std::string table = eval::text_table({report});
  write_text(c.ws.report("eval.txt"), table);
  c.out << table;
  return kOk;
}

int cmd_ablate(Context& c) {
  const dataset::Vocabularies vocabs = load_vocabs(c.ws);
  eval::AblationInputs in;
  in.base = sized_model(c.cfg, vocabs);
  in.train = c.cfg.train;
  in.train_data = load_examples(c.ws, "train", vocabs, c.cfg);
  in.test_data = load_examples(c.ws, "test", vocabs, c.cfg);
  in.eval = eval_options(c.cfg);
  in.eval.scorer = eval::ScorerKind::kModel;
  in.init_seed = c.cfg.seed;
  if (c.cfg.use_pretrained && have_embeddings(c.ws)) {
    auto emb = std::make_shared<dataset::Embeddings>(load_pretrained(c.ws));
    in.prepare = [emb, &vocabs](nn::ParamStore<float>& params, const model::ModelConfig& m) {
      model::load_embeddings(params, m, vocabs, *emb);
    };
  }
  std::vector<eval::EvalReport> rows;
  for (const auto& variant : model::ablation_variants(in.base)) {
    c.log->info("ablation row {}", model::variant_name(variant));
    auto one = eval::ablation_run({variant}, in);
    rows.push_back(std::move(one.front()));
  }
  json arr = json::array();
  for (const auto& r : rows) arr.push_back(report_json(r, c.cfg.eval.k));
  write_json(c.ws.report("ablation.json"), arr);
  const std::string table = eval::text_table(rows);
  write_text(c.ws.report("ablation.txt"), table);
  c.out << table;
  return kOk;
}

// ---------------------------------------------------------------- flags

// Registers flags whose values override the config only when given.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <class T>
  void option(const std::string& name, const std::string& help, std::function<void(RunConfig&, const T&)> set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *value, help);
    appliers_.push_back([opt, value, set](RunConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
  }

  void flag(const std::string& name, const std::string& help, std::function<void(RunConfig&)> set) {
    CLI::Option* opt = app_->add_flag(name, help);
    appliers_.push_back([opt, set](RunConfig& c) {
      if (opt->count() > 0) set(c);
    });
  }

  void apply(RunConfig& c) const {
    for (const auto& f : appliers_) f(c);
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::function<void(RunConfig&)>> appliers_;
};

void common_flags(Binder& b) {
  b.option<std::string>("--workdir", "Pipeline working directory", [](RunConfig& c, const std::string& v) { c.workdir = v; });
  b.option<std::uint64_t>("--seed", "Random seed", [](RunConfig& c, const std::uint64_t& v) { c.seed = v; });
  b.option<int>("--threads", "Worker cap (1 = fully deterministic)", [](RunConfig& c, const int& v) { c.threads = v; });
}

void feature_flags(Binder& b) {
  b.option<std::size_t>("--max-nodes", "CSRG node budget", [](RunConfig& c, const std::size_t& v) { c.features.max_nodes = v; });
  b.option<double>("--ast-weight", "AST edge weight", [](RunConfig& c, const double& v) { c.features.weights.ast = v; });
  b.option<double>("--dfg-weight", "Data-flow edge weight", [](RunConfig& c, const double& v) { c.features.weights.dfg = v; });
  b.option<double>("--self-loop-weight", "GAT self-loop weight",
                   [](RunConfig& c, const double& v) { c.features.self_loop_weight = v; });
  b.option<std::size_t>("--max-code-len", "Code token budget",
                        [](RunConfig& c, const std::size_t& v) { c.features.max_code_len = v; });
  b.option<std::size_t>("--max-query-len", "Query token budget",
                        [](RunConfig& c, const std::size_t& v) { c.features.max_query_len = v; });
  b.option<std::size_t>("--min-count", "Minimum token count for the vocabulary",
                        [](RunConfig& c, const std::size_t& v) { c.features.min_count = v; });
}

void pretrain_flags(Binder& b) {
  b.option<int>("--embed-dim", "Embedding size", [](RunConfig& c, const int& v) { c.model.embed_dim = v; });
  b.option<int>("--window", "Skip-gram window", [](RunConfig& c, const int& v) {
    c.pretrain.tokens.window = v;
    c.pretrain.nodes.window = v;
  });
  b.option<int>("--negatives", "Negative samples per pair", [](RunConfig& c, const int& v) {
    c.pretrain.tokens.negatives = v;
    c.pretrain.nodes.negatives = v;
  });
  b.option<int>("--pretrain-epochs", "Skip-gram epochs", [](RunConfig& c, const int& v) {
    c.pretrain.tokens.epochs = v;
    c.pretrain.nodes.epochs = v;
  });
  b.option<double>("--pretrain-lr", "Skip-gram learning rate", [](RunConfig& c, const double& v) {
    c.pretrain.tokens.lr = v;
    c.pretrain.nodes.lr = v;
  });
  b.option<int>("--walks-per-node", "Random walks per node and pass",
                [](RunConfig& c, const int& v) { c.pretrain.walks.gamma = v; });
  b.option<int>("--walk-length", "Random walk length", [](RunConfig& c, const int& v) { c.pretrain.walks.t = v; });
  b.flag("--no-subwords", "Disable character n-gram features", [](RunConfig& c) { c.pretrain.tokens.subwords = false; });
}

void model_flags(Binder& b) {
  b.option<int>("--embed-dim", "Embedding size", [](RunConfig& c, const int& v) { c.model.embed_dim = v; });
  b.option<int>("--hidden", "Hidden size", [](RunConfig& c, const int& v) { c.model.hidden = v; });
  b.option<int>("--d-m", "Branch projection size", [](RunConfig& c, const int& v) { c.model.d_m = v; });
  b.option<int>("--cress-blocks", "Stacked CRESS blocks", [](RunConfig& c, const int& v) { c.model.cress_blocks = v; });
  b.option<int>("--gat-layers", "GAT layers (1 or 2)", [](RunConfig& c, const int& v) { c.model.gat_layers = v; });
  b.option<double>("--dropout", "Dropout rate", [](RunConfig& c, const double& v) { c.model.dropout = v; });
  b.option<double>("--init-scale", "Scale of the dense weight initialization",
                   [](RunConfig& c, const double& v) { c.model.init_scale = v; });
  b.flag("--identity-align", "Skip the alignment projection", [](RunConfig& c) { c.model.identity_align = true; });
  b.flag("--no-cress", "Disable the CRESS branch", [](RunConfig& c) { c.model.use_cress = false; });
  b.flag("--no-csrg", "Disable the CSRG branch", [](RunConfig& c) { c.model.use_csrg = false; });
  b.flag("--no-attention", "Max-pool instead of attention pooling", [](RunConfig& c) { c.model.use_attention = false; });
  b.flag("--freeze-embeddings", "Keep embedding tables fixed", [](RunConfig& c) { c.model.freeze_embeddings = true; });
  b.flag("--no-pretrained", "Ignore pretrained embeddings", [](RunConfig& c) { c.use_pretrained = false; });
}

void train_flags(Binder& b) {
  b.option<int>("--batch-size", "Batch size", [](RunConfig& c, const int& v) { c.train.batch_size = v; });
  b.option<int>("--epochs", "Last epoch to train", [](RunConfig& c, const int& v) { c.train.epochs = v; });
  b.option<double>("--lr", "Adam learning rate", [](RunConfig& c, const double& v) { c.train.lr = v; });
  b.option<double>("--beta", "Triplet margin", [](RunConfig& c, const double& v) { c.train.beta = v; });
  b.option<double>("--clip-norm", "Global gradient norm cap", [](RunConfig& c, const double& v) { c.train.clip_norm = v; });
  b.option<int>("--patience", "Early-stopping patience on validation MRR (0 = off)",
                [](RunConfig& c, const int& v) { c.train.patience = v; });
  b.option<double>("--validation-fraction", "Training share held out when patience > 0",
                   [](RunConfig& c, const double& v) { c.validation_fraction = v; });
}

void checkpoint_flag(Binder& b) {
  b.option<std::string>("--checkpoint", "Checkpoint directory",
                        [](RunConfig& c, const std::string& v) { c.checkpoint = v; });
}

void retrieval_flags(Binder& b) {
  b.option<std::string>("--mode", "exhaustive or two_stage", [](RunConfig& c, const std::string& v) { c.eval.mode = v; });
  b.option<std::size_t>("--top-n", "Candidates re-scored in two-stage mode",
                        [](RunConfig& c, const std::size_t& v) { c.eval.top_n = v; });
}

void eval_flags(Binder& b) {
  retrieval_flags(b);
  b.option<std::size_t>("--pool-size", "Candidates per query (gold + distractors)",
                        [](RunConfig& c, const std::size_t& v) { c.eval.pool_size = v; });
  b.flag("--full-corpus", "Rank against the whole test set", [](RunConfig& c) { c.eval.full_corpus = true; });
  b.option<std::vector<std::size_t>>("--k", "Cutoffs for SuccessRate@k",
                                     [](RunConfig& c, const std::vector<std::size_t>& v) { c.eval.k = v; });
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kUsage;
  if (dynamic_cast<const CheckpointError*>(&e) != nullptr) return kCheckpoint;
  if (dynamic_cast<const InvariantError*>(&e) != nullptr) return kInvariant;
  if (dynamic_cast<const ShapeError*>(&e) != nullptr) return kInvariant;
  if (dynamic_cast<const IoError*>(&e) != nullptr) return kData;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return kData;
  return kInvariant;
}

}  // namespace

// ---------------------------------------------------------------- RunConfig JSON

json to_json(const RunConfig& cfg) {
  json m = model::to_json(cfg.model);
  for (const char* k : {"code_vocab", "query_vocab", "node_vocab"}) m.erase(k);
  json t = train::to_json(cfg.train);
  t.erase("seed");
  return {{"corpus", cfg.corpus.string()},
          {"workdir", cfg.workdir.string()},
          {"checkpoint", cfg.checkpoint.string()},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"split", {{"test_fraction", cfg.test_fraction}, {"validation_fraction", cfg.validation_fraction}}},
          {"graph",
           {{"max_nodes", cfg.features.max_nodes},
            {"ast_weight", cfg.features.weights.ast},
            {"dfg_weight", cfg.features.weights.dfg},
            {"self_loop_weight", cfg.features.self_loop_weight}}},
          {"features",
           {{"max_code_len", cfg.features.max_code_len},
            {"max_query_len", cfg.features.max_query_len},
            {"min_count", cfg.features.min_count}}},
          {"pretrain",
           {{"enabled", cfg.use_pretrained},
            {"window", cfg.pretrain.tokens.window},
            {"negatives", cfg.pretrain.tokens.negatives},
            {"epochs", cfg.pretrain.tokens.epochs},
            {"lr", cfg.pretrain.tokens.lr},
            {"subwords", cfg.pretrain.tokens.subwords},
            {"walks_per_node", cfg.pretrain.walks.gamma},
            {"walk_length", cfg.pretrain.walks.t}}},
          {"model", m},
          {"train", t},
          {"eval",
           {{"pool_size", cfg.eval.pool_size},
            {"full_corpus", cfg.eval.full_corpus},
            {"mode", cfg.eval.mode},
            {"top_n", cfg.eval.top_n},
            {"scorer", cfg.eval.scorer},
            {"k", cfg.eval.k},
            {"top_k", cfg.eval.top_k}}}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  const Section root(j, "",
                     {"corpus", "workdir", "checkpoint", "seed", "threads", "split", "graph", "features", "pretrain",
                      "model", "train", "eval"});
  root.get_path("corpus", cfg.corpus);
  root.get_path("workdir", cfg.workdir);
  root.get_path("checkpoint", cfg.checkpoint);
  root.get("seed", cfg.seed);
  root.get("threads", cfg.threads);
  if (root.has("split")) {
    const Section s(root.at("split"), "split", {"test_fraction", "validation_fraction"});
    s.get("test_fraction", cfg.test_fraction);
    s.get("validation_fraction", cfg.validation_fraction);
  }
  if (root.has("graph")) {
    const Section s(root.at("graph"), "graph", {"max_nodes", "ast_weight", "dfg_weight", "self_loop_weight"});
    s.get("max_nodes", cfg.features.max_nodes);
    s.get("ast_weight", cfg.features.weights.ast);
    s.get("dfg_weight", cfg.features.weights.dfg);
    s.get("self_loop_weight", cfg.features.self_loop_weight);
  }
  if (root.has("features")) {
    const Section s(root.at("features"), "features", {"max_code_len", "max_query_len", "min_count"});
    s.get("max_code_len", cfg.features.max_code_len);
    s.get("max_query_len", cfg.features.max_query_len);
    s.get("min_count", cfg.features.min_count);
  }
  if (root.has("pretrain")) {
    const Section s(root.at("pretrain"), "pretrain",
                    {"enabled", "window", "negatives", "epochs", "lr", "subwords", "walks_per_node", "walk_length"});
    s.get("enabled", cfg.use_pretrained);
    s.get("window", cfg.pretrain.tokens.window);
    s.get("negatives", cfg.pretrain.tokens.negatives);
    s.get("epochs", cfg.pretrain.tokens.epochs);
    s.get("lr", cfg.pretrain.tokens.lr);
    s.get("subwords", cfg.pretrain.tokens.subwords);
    s.get("walks_per_node", cfg.pretrain.walks.gamma);
    s.get("walk_length", cfg.pretrain.walks.t);
    const bool subwords = cfg.pretrain.nodes.subwords;
    cfg.pretrain.nodes = cfg.pretrain.tokens;
    cfg.pretrain.nodes.subwords = subwords;
  }
  if (root.has("model")) {
    const Section s(root.at("model"), "model",
                    {"embed_dim", "hidden", "d_m", "cress_blocks", "gat_layers", "leaky_slope", "identity_align",
                     "dropout", "use_cress", "use_csrg", "use_attention", "freeze_embeddings", "init_scale"});
    s.get("embed_dim", cfg.model.embed_dim);
    s.get("hidden", cfg.model.hidden);
    s.get("d_m", cfg.model.d_m);
    s.get("cress_blocks", cfg.model.cress_blocks);
    s.get("gat_layers", cfg.model.gat_layers);
    s.get("leaky_slope", cfg.model.leaky_slope);
    s.get("identity_align", cfg.model.identity_align);
    s.get("dropout", cfg.model.dropout);
    s.get("use_cress", cfg.model.use_cress);
    s.get("use_csrg", cfg.model.use_csrg);
    s.get("use_attention", cfg.model.use_attention);
    s.get("freeze_embeddings", cfg.model.freeze_embeddings);
    s.get("init_scale", cfg.model.init_scale);
  }
  if (root.has("train")) {
    const Section s(root.at("train"), "train", {"batch_size", "epochs", "lr", "beta", "clip_norm", "patience"});
    s.get("batch_size", cfg.train.batch_size);
    s.get("epochs", cfg.train.epochs);
    s.get("lr", cfg.train.lr);
    s.get("beta", cfg.train.beta);
    s.get("clip_norm", cfg.train.clip_norm);
    s.get("patience", cfg.train.patience);
  }
  if (root.has("eval")) {
    const Section s(root.at("eval"), "eval", {"pool_size", "full_corpus", "mode", "top_n", "scorer", "k", "top_k"});
    s.get("pool_size", cfg.eval.pool_size);
    s.get("full_corpus", cfg.eval.full_corpus);
    s.get("mode", cfg.eval.mode);
    s.get("top_n", cfg.eval.top_n);
    s.get("scorer", cfg.eval.scorer);
    s.get("k", cfg.eval.k);
    s.get("top_k", cfg.eval.top_k);
  }
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.workdir.empty()) throw ConfigError("workdir must not be empty");
  if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
  if (cfg.test_fraction < 0.0 || cfg.test_fraction >= 1.0) throw ConfigError("test_fraction must be in [0, 1)");
  if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction >= 1.0) {
    throw ConfigError("validation_fraction must be in (0, 1)");
  }
  if (cfg.features.max_nodes < 1) throw ConfigError("max_nodes must be >= 1");
  if (cfg.features.max_code_len < 1 || cfg.features.max_query_len < 1) throw ConfigError("token budgets must be >= 1");
  if (cfg.features.weights.ast <= 0.0 || cfg.features.weights.dfg <= 0.0 || cfg.features.self_loop_weight <= 0.0) {
    throw ConfigError("edge weights must be positive");
  }
  if (cfg.pretrain.walks.gamma < 1 || cfg.pretrain.walks.t < 1) throw ConfigError("walk settings must be >= 1");
  if (cfg.eval.top_k < 1 || cfg.eval.top_n < 1) throw ConfigError("top_k and top_n must be >= 1");
  if (cfg.eval.k.empty()) throw ConfigError("eval.k must list at least one cutoff");
  for (std::size_t k : cfg.eval.k) {
    if (k < 1) throw ConfigError("eval.k cutoffs must be >= 1");
  }
  parse_mode(cfg.eval);
  eval::scorer_from_string(cfg.eval.scorer);
  train::validate(cfg.train);
}

// ---------------------------------------------------------------- entry point

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cssam: code search with structured code representations and cross-attention matching"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  std::string config_path;
  struct Command {
    CLI::App* app;
    std::unique_ptr<Binder> binder;
  };
  std::vector<Command> commands;
  auto add = [&](const std::string& name, const std::string& help) -> Binder& {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration");
    commands.push_back({sub, std::make_unique<Binder>(sub)});
    common_flags(*commands.back().binder);
    return *commands.back().binder;
  };

  Binder& synth = add("synth", "Write a synthetic Java corpus");
  std::size_t synth_count = 200;
  std::string synth_out = "synthetic.jsonl";
  synth.app()->add_option("--count", synth_count, "Number of pairs")->capture_default_str();
  synth.app()->add_option("--out", synth_out, "Output JSON-lines path")->capture_default_str();

  Binder& ingest = add("ingest", "Load a JSON-lines corpus, split it and build vocabularies");
  ingest.option<std::string>("--corpus", "Corpus path", [](RunConfig& c, const std::string& v) { c.corpus = v; });
  ingest.option<double>("--test-fraction", "Share of pairs held out for testing",
                        [](RunConfig& c, const double& v) { c.test_fraction = v; });
  feature_flags(ingest);

  Binder& graphs = add("graphs", "Build and validate CSRGs for every snippet");
  feature_flags(graphs);

  Binder& pre = add("pretrain", "Pretrain token and node embeddings");
  pretrain_flags(pre);
  feature_flags(pre);

  Binder& tr = add("train", "Train the model with the triplet ranking loss");
  model_flags(tr);
  train_flags(tr);
  feature_flags(tr);
  checkpoint_flag(tr);
  retrieval_flags(tr);
  bool resume = false;
  tr.app()->add_flag("--resume", resume, "Continue from the checkpoint when one exists");

  Binder& search = add("search", "Rank every snippet against a query (argument or stdin lines)");
  checkpoint_flag(search);
  retrieval_flags(search);
  feature_flags(search);
  search.option<std::size_t>("--top-k", "Results to print", [](RunConfig& c, const std::size_t& v) { c.eval.top_k = v; });
  std::vector<std::string> query_words;
  std::string format = "json";
  search.app()->add_option("query", query_words, "Query text; read from stdin when absent");
  search.app()->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();

  Binder& ev = add("eval", "Evaluate on the test split");
  checkpoint_flag(ev);
  eval_flags(ev);
  feature_flags(ev);
  ev.option<std::string>("--scorer", "model, random or oracle",
                         [](RunConfig& c, const std::string& v) { c.eval.scorer = v; });

  Binder& ab = add("ablate", "Train and evaluate the five ablation variants");
  model_flags(ab);
  train_flags(ab);
  eval_flags(ab);
  feature_flags(ab);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("cssam", sink);
  log->set_pattern("[%l] %v");

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = run_config_from_json(read_json(config_path));
    if (const char* env = std::getenv("CSSAM_WORKDIR"); env != nullptr && *env != '\0') cfg.workdir = env;
    const Command* chosen = nullptr;
    for (const auto& c : commands) {
      if (c.app->parsed()) chosen = &c;
    }
    chosen->binder->apply(cfg);
    cfg.train.seed = cfg.seed;
    cfg.pretrain.tokens.seed = cfg.seed;
    cfg.pretrain.nodes.seed = cfg.seed + 1;
    cfg.pretrain.walks.seed = cfg.seed;
    validate(cfg);
    if (cfg.threads == 0) cfg.threads = default_threads();

    Context ctx{cfg, Workspace{cfg.workdir}, log, out, std::cin};
    const std::string name = chosen->app->get_name();
    if (name == "synth") return cmd_synth(ctx, synth_count, synth_out);
    if (name == "ingest") return cmd_ingest(ctx);
    if (name == "graphs") return cmd_graphs(ctx);
    if (name == "pretrain") return cmd_pretrain(ctx);
    if (name == "train") return cmd_train(ctx, resume);
    if (name == "search") return cmd_search(ctx, query_words, format);
    if (name == "eval") return cmd_eval(ctx);
    if (name == "ablate") return cmd_ablate(ctx);
    return kUsage;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return exit_code_for(e);
  }
}

}  // namespace cssam::cli
