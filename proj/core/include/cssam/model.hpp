#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cssam/dataset.hpp"
#include "cssam/layers.hpp"
#include "cssam/tensor.hpp"

namespace cssam::model {

struct ModelConfig {
  int embed_dim = 300;
  int hidden = 256;
  int d_m = 256;
  int cress_blocks = 4;
  int gat_layers = 1;
  double leaky_slope = 0.2;
  bool identity_align = false;
  double dropout = 0.2;
  // Branch switches for the ablation variants.
  bool use_cress = true;
  bool use_csrg = true;
  bool use_attention = true;
  bool freeze_embeddings = false;
  // Dense weights start uniform in ±init_scale·sqrt(6 / (fan_in + fan_out)).
  double init_scale = 1.0;
  int code_vocab = 0;
  int query_vocab = 0;
  int node_vocab = 0;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
// Rejects unknown keys; missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);
void validate(const ModelConfig& cfg);

// "Base", "Base+CSRG", "Base+CRESS", "Base+CRESS+CSRG", "Base+CRESS+CSRG+Attn"
// and the remaining combinations in the same naming scheme.
std::string variant_name(const ModelConfig& cfg);

// The five rows of the ablation table, in order.
std::vector<ModelConfig> ablation_variants(const ModelConfig& base);

// Every tensor the configuration uses, with its shape. Disabled branches
// contribute nothing.
nn::ShapeList param_shapes(const ModelConfig& cfg);

// Random initialization: embeddings N(0, 0.1²) with a zero <PAD> row,
// dense weights Xavier-uniform scaled by init_scale, biases zero.
nn::ParamStore<float> init_params(const ModelConfig& cfg, std::uint64_t seed);

// Overwrites the embedding tables with pretrained vectors: each vocabulary
// token takes its pretrained row, <PAD> is zero and <UNK> is the table mean.
void load_embeddings(nn::ParamStore<float>& params, const ModelConfig& cfg, const dataset::Vocabularies& vocabs,
                     const dataset::Embeddings& embeddings);

// Branch vectors (each 1×d_m) and the fused pair encoding.
struct PairVars {
  nn::Var code_tok;
  nn::Var csrg;
  nn::Var docs_lstm;
  nn::Var docs_tok;
  nn::Var x_code;
  nn::Var x_docs;
};

// Query-independent branches, usable for a first retrieval stage.
template <class T>
nn::Var encode_csrg(nn::Tape<T>& tape, const ModelConfig& cfg, const dataset::GraphFeatures& graph);
template <class T>
nn::Var encode_docs_lstm(nn::Tape<T>& tape, const ModelConfig& cfg, const std::vector<int>& query_ids);

// x_code = [CodeTokens_CRESS ; CSRG_GAT] and x_docs = [Docs_lstm ; Docs_CRESS].
// With CSRG disabled both sides keep only their first slot. Dropout is active
// only when dropout_rng is given.
template <class T>
PairVars encode_pair(nn::Tape<T>& tape, const ModelConfig& cfg, const dataset::Example& code,
                     const std::vector<int>& query_ids, std::mt19937_64* dropout_rng = nullptr);

// max(0, beta - sim(x, d+) + sim(x, d-)) on the tape; the two similarities
// come from encoding the code against each docstring.
template <class T>
nn::Var triplet_loss(nn::Tape<T>& tape, const ModelConfig& cfg, const dataset::Example& code,
                     const std::vector<int>& positive, const std::vector<int>& negative, double beta,
                     std::mt19937_64* dropout_rng = nullptr);

// Cosine similarity; throws InvariantError on a zero vector or ShapeError
// on a length mismatch.
double similarity(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& q);
double triplet_loss(double sim_pos, double sim_neg, double beta);

struct PairEncoding {
  Eigen::RowVectorXf x_code;
  Eigen::RowVectorXf x_docs;
};

// Inference-time encoding without gradient bookkeeping.
PairEncoding encode(const nn::ParamStore<float>& params, const ModelConfig& cfg, const dataset::Example& code,
                    const std::vector<int>& query_ids);
double score(const nn::ParamStore<float>& params, const ModelConfig& cfg, const dataset::Example& code,
             const std::vector<int>& query_ids);

}  // namespace cssam::model
