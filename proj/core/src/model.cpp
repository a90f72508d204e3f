#include "cssam/model.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "cssam/error.hpp"

namespace cssam::model {

namespace {

constexpr const char* kBranchCodeTok = "code_tok";
constexpr const char* kBranchCsrg = "csrg";
constexpr const char* kBranchDocsLstm = "docs_lstm";
constexpr const char* kBranchDocsTok = "docs_tok";

Eigen::Index token_branch_dim(const ModelConfig& cfg) { return cfg.use_cress ? cfg.hidden : cfg.embed_dim; }

// CRESS outputs are reduced with max-over-time; fusion attention pools the
// other branch sequences (and the raw token branches when CRESS is off).
bool attention_pooled(const ModelConfig& cfg, const std::string& branch) {
  if (!cfg.use_attention) return false;
  const bool token_branch = branch == kBranchCodeTok || branch == kBranchDocsTok;
  return !(token_branch && cfg.use_cress);
}

}  // namespace

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"embed_dim", cfg.embed_dim},       {"hidden", cfg.hidden},
          {"d_m", cfg.d_m},                   {"cress_blocks", cfg.cress_blocks},
          {"gat_layers", cfg.gat_layers},     {"leaky_slope", cfg.leaky_slope},
          {"identity_align", cfg.identity_align}, {"dropout", cfg.dropout},
          {"use_cress", cfg.use_cress},       {"use_csrg", cfg.use_csrg},
          {"use_attention", cfg.use_attention}, {"freeze_embeddings", cfg.freeze_embeddings},
          {"init_scale", cfg.init_scale},     {"code_vocab", cfg.code_vocab},
          {"query_vocab", cfg.query_vocab},   {"node_vocab", cfg.node_vocab}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig cfg;
  const nlohmann::json defaults = to_json(cfg);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown model config key: " + key);
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("embed_dim", cfg.embed_dim);
    get("hidden", cfg.hidden);
    get("d_m", cfg.d_m);
    get("cress_blocks", cfg.cress_blocks);
    get("gat_layers", cfg.gat_layers);
    get("leaky_slope", cfg.leaky_slope);
    get("identity_align", cfg.identity_align);
    get("dropout", cfg.dropout);
    get("use_cress", cfg.use_cress);
    get("use_csrg", cfg.use_csrg);
    get("use_attention", cfg.use_attention);
    get("freeze_embeddings", cfg.freeze_embeddings);
    get("init_scale", cfg.init_scale);
    get("code_vocab", cfg.code_vocab);
    get("query_vocab", cfg.query_vocab);
    get("node_vocab", cfg.node_vocab);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model config value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

void validate(const ModelConfig& cfg) {
  if (cfg.embed_dim < 1 || cfg.hidden < 1 || cfg.d_m < 1) throw ConfigError("model dims must be >= 1");
  if (cfg.cress_blocks < 1) throw ConfigError("cress_blocks must be >= 1");
  if (cfg.gat_layers < 1 || cfg.gat_layers > 2) throw ConfigError("gat_layers must be 1 or 2");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (cfg.leaky_slope < 0.0) throw ConfigError("leaky_slope must be >= 0");
  if (cfg.init_scale <= 0.0) throw ConfigError("init_scale must be positive");
  if (cfg.code_vocab < 2 || cfg.query_vocab < 2) throw ConfigError("vocabulary sizes must be set (>= 2)");
  if (cfg.use_csrg && cfg.node_vocab < 2) throw ConfigError("node_vocab must be set (>= 2) when CSRG is enabled");
}

std::string variant_name(const ModelConfig& cfg) {
  std::string name = "Base";
  if (cfg.use_cress) name += "+CRESS";
  if (cfg.use_csrg) name += "+CSRG";
  if (cfg.use_attention) name += "+Attn";
  return name;
}

std::vector<ModelConfig> ablation_variants(const ModelConfig& base) {
  const bool rows[5][3] = {
      {false, false, false}, {false, true, false}, {true, false, false}, {true, true, false}, {true, true, true}};
  std::vector<ModelConfig> out;
  for (const auto& r : rows) {
    ModelConfig c = base;
    c.use_cress = r[0];
    c.use_csrg = r[1];
    c.use_attention = r[2];
    out.push_back(c);
  }
  return out;
}

nn::ShapeList param_shapes(const ModelConfig& cfg) {
  const Eigen::Index e = cfg.embed_dim;
  const Eigen::Index h = cfg.hidden;
  nn::ShapeList out = {{"embed.code", {cfg.code_vocab, e}}, {"embed.query", {cfg.query_vocab, e}}};
  auto append = [&out](const nn::ShapeList& more) { out.insert(out.end(), more.begin(), more.end()); };
  append(nn::lstm_shapes("lstm", e, h));
  if (cfg.use_cress) {
    for (int n = 1; n <= cfg.cress_blocks; ++n) {
      append(nn::cress_block_shapes("cress.block" + std::to_string(n), e, h, cfg.identity_align));
    }
  }
  std::vector<std::pair<std::string, Eigen::Index>> branches = {{kBranchCodeTok, token_branch_dim(cfg)},
                                                                {kBranchDocsLstm, h}};
  if (cfg.use_csrg) {
    out.push_back({"embed.node", {cfg.node_vocab, e}});
    for (int k = 0; k < cfg.gat_layers; ++k) append(nn::gat_shapes("gat.layer" + std::to_string(k), k == 0 ? e : h, h));
    branches.push_back({kBranchCsrg, h});
    branches.push_back({kBranchDocsTok, token_branch_dim(cfg)});
  }
  for (const auto& [name, dim] : branches) {
    if (attention_pooled(cfg, name)) append(nn::pool_shapes("pool." + name, dim));
    append(nn::linear_shapes("proj." + name, dim, cfg.d_m));
  }
  return out;
}

nn::ParamStore<float> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  nn::ParamStore<float> store;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> embed_init(0.0, 0.1);
  for (const auto& [name, shape] : param_shapes(cfg)) {
    nn::Mat<float> m = nn::Mat<float>::Zero(shape.rows, shape.cols);
    const bool is_embedding = name.rfind("embed.", 0) == 0;
    const bool is_bias = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
    if (is_embedding) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(embed_init(rng));
      m.row(0).setZero();
      if (cfg.freeze_embeddings) store.frozen.insert(name);
    } else if (!is_bias) {
      // Row vectors (attention vectors) act as a dim -> 1 map.
      const double fan_in = shape.rows == 1 ? static_cast<double>(shape.cols) : static_cast<double>(shape.rows);
      const double fan_out = shape.rows == 1 ? 1.0 : static_cast<double>(shape.cols);
      const double limit = cfg.init_scale * std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> init(-limit, limit);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(init(rng));
    }
    store.tensors.emplace(name, std::move(m));
  }
  return store;
}

void load_embeddings(nn::ParamStore<float>& params, const ModelConfig& cfg, const dataset::Vocabularies& vocabs,
                     const dataset::Embeddings& embeddings) {
  auto fill = [&](const std::string& name, const corpus::Vocab& vocab, const pretrain::EmbeddingTable& table) {
    if (!params.contains(name)) return;
    if (table.dim() != cfg.embed_dim) {
      throw ConfigError("pretrained " + name + " has dim " + std::to_string(table.dim()) + ", model expects " +
                        std::to_string(cfg.embed_dim));
    }
    nn::Mat<float>& m = params.at(name);
    if (static_cast<std::size_t>(m.rows()) != vocab.size()) throw ShapeError(name + " does not match its vocabulary");
    const Eigen::RowVectorXf mean = table.mean();
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      if (static_cast<int>(i) == corpus::kPadId) {
        m.row(row).setZero();
      } else if (static_cast<int>(i) == corpus::kUnkId || !table.contains(vocab.token(static_cast<int>(i)))) {
        m.row(row) = mean;
      } else {
        m.row(row) = table.lookup(vocab.token(static_cast<int>(i)));
      }
    }
  };
  fill("embed.code", vocabs.code, embeddings.tokens);
  fill("embed.query", vocabs.query, embeddings.tokens);
  fill("embed.node", vocabs.node, embeddings.nodes);
}

namespace {

template <class T>
nn::Var pool_and_project(nn::Tape<T>& tape, const ModelConfig& cfg, nn::Var h, const nn::Mask& mask,
                         const std::string& branch) {
  const nn::Var pooled =
      attention_pooled(cfg, branch) ? nn::attention_pool(tape, h, mask, "pool." + branch) : nn::max_pool(tape, h, mask);
  return nn::linear(tape, pooled, "proj." + branch);
}

void require_tokens(const std::vector<int>& ids, const char* what) {
  if (ids.empty()) throw DataError(std::string("encode_pair: empty ") + what);
}

}  // namespace

template <class T>
nn::Var encode_csrg(nn::Tape<T>& tape, const ModelConfig& cfg, const dataset::GraphFeatures& graph) {
  if (!cfg.use_csrg) throw ConfigError("the CSRG branch is disabled in this model");
  if (graph.graph.nodes < 1 || static_cast<int>(graph.node_ids.size()) != graph.graph.nodes ||
      graph.label_ids.size() != graph.node_ids.size()) {
    throw DataError("encode_csrg: malformed graph features");
  }
  nn::Var h = tape.add(tape.gather_mean_rows("embed.code", graph.label_ids), tape.gather_rows("embed.node", graph.node_ids));
  const nn::Mat<T> log_weights = nn::gat_log_weights<T>(graph.graph);
  for (int k = 0; k < cfg.gat_layers; ++k) {
    h = nn::gat_layer(tape, h, log_weights, "gat.layer" + std::to_string(k), static_cast<T>(cfg.leaky_slope));
  }
  return pool_and_project(tape, cfg, h, nn::all_real(static_cast<std::size_t>(graph.graph.nodes)), kBranchCsrg);
}

template <class T>
nn::Var encode_docs_lstm(nn::Tape<T>& tape, const ModelConfig& cfg, const std::vector<int>& query_ids) {
  require_tokens(query_ids, "query");
  const nn::Mask mask = nn::all_real(query_ids.size());
  const nn::Var h = nn::lstm_encode(tape, tape.gather_rows("embed.query", query_ids), mask, "lstm");
  return pool_and_project(tape, cfg, h, mask, kBranchDocsLstm);
}

template <class T>
PairVars encode_pair(nn::Tape<T>& tape, const ModelConfig& cfg, const dataset::Example& code,
                     const std::vector<int>& query_ids, std::mt19937_64* dropout_rng) {
  require_tokens(code.code_ids, "code");
  require_tokens(query_ids, "query");
  const nn::Mask code_mask = nn::all_real(code.code_ids.size());
  const nn::Mask query_mask = nn::all_real(query_ids.size());
  const nn::Var code_emb = tape.gather_rows("embed.code", code.code_ids);
  const nn::Var query_emb = tape.gather_rows("embed.query", query_ids);

  nn::Var code_h = code_emb;
  nn::Var docs_h = query_emb;
  if (cfg.use_cress) {
    const nn::CressOptions options{cfg.identity_align, cfg.dropout};
    const nn::Aligned out =
        nn::cress_stack(tape, code_emb, query_emb, code_mask, query_mask, "cress", cfg.cress_blocks, options, dropout_rng);
    code_h = out.a;
    docs_h = out.b;
  }

  PairVars v;
  v.code_tok = pool_and_project(tape, cfg, code_h, code_mask, kBranchCodeTok);
  v.docs_lstm = encode_docs_lstm(tape, cfg, query_ids);
  if (cfg.use_csrg) {
    v.csrg = encode_csrg(tape, cfg, code.graph);
    v.docs_tok = pool_and_project(tape, cfg, docs_h, query_mask, kBranchDocsTok);
    v.x_code = tape.concat_cols({v.code_tok, v.csrg});
    v.x_docs = tape.concat_cols({v.docs_lstm, v.docs_tok});
  } else {
    v.x_code = v.code_tok;
    v.x_docs = v.docs_lstm;
  }
  return v;
}

template <class T>
nn::Var triplet_loss(nn::Tape<T>& tape, const ModelConfig& cfg, const dataset::Example& code,
                     const std::vector<int>& positive, const std::vector<int>& negative, double beta,
                     std::mt19937_64* dropout_rng) {
  if (beta < 0.0) throw ConfigError("triplet margin must be >= 0");
  const PairVars pos = encode_pair(tape, cfg, code, positive, dropout_rng);
  const PairVars neg = encode_pair(tape, cfg, code, negative, dropout_rng);
  const nn::Var sim_pos = tape.cosine(pos.x_code, pos.x_docs);
  const nn::Var sim_neg = tape.cosine(neg.x_code, neg.x_docs);
  nn::Mat<T> margin(1, 1);
  margin(0, 0) = static_cast<T>(beta);
  return tape.relu(tape.add_const(tape.sub(sim_neg, sim_pos), margin));
}

double similarity(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& q) {
  if (x.size() != q.size()) throw ShapeError("similarity: vector lengths differ");
  const double nx = x.norm();
  const double nq = q.norm();
  if (nx == 0.0 || nq == 0.0) throw InvariantError("cosine similarity of a zero vector is undefined");
  return x.dot(q) / (nx * nq);
}

double triplet_loss(double sim_pos, double sim_neg, double beta) {
  if (beta < 0.0) throw ConfigError("triplet margin must be >= 0");
  return std::max(0.0, beta - sim_pos + sim_neg);
}

PairEncoding encode(const nn::ParamStore<float>& params, const ModelConfig& cfg, const dataset::Example& code,
                    const std::vector<int>& query_ids) {
  nn::Tape<float> tape(&params, false);
  const PairVars v = encode_pair(tape, cfg, code, query_ids);
  return {tape.value(v.x_code).row(0), tape.value(v.x_docs).row(0)};
}

double score(const nn::ParamStore<float>& params, const ModelConfig& cfg, const dataset::Example& code,
             const std::vector<int>& query_ids) {
  const PairEncoding e = encode(params, cfg, code, query_ids);
  return similarity(e.x_code.cast<double>(), e.x_docs.cast<double>());
}

#define CSSAM_INSTANTIATE_MODEL(T)                                                                              \
  template nn::Var encode_csrg<T>(nn::Tape<T>&, const ModelConfig&, const dataset::GraphFeatures&);            \
  template nn::Var encode_docs_lstm<T>(nn::Tape<T>&, const ModelConfig&, const std::vector<int>&);             \
  template PairVars encode_pair<T>(nn::Tape<T>&, const ModelConfig&, const dataset::Example&,                  \
                                   const std::vector<int>&, std::mt19937_64*);                                 \
  template nn::Var triplet_loss<T>(nn::Tape<T>&, const ModelConfig&, const dataset::Example&,                  \
                                   const std::vector<int>&, const std::vector<int>&, double, std::mt19937_64*);

CSSAM_INSTANTIATE_MODEL(float)
CSSAM_INSTANTIATE_MODEL(double)

#undef CSSAM_INSTANTIATE_MODEL

}  // namespace cssam::model
