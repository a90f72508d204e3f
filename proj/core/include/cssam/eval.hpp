#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cssam/dataset.hpp"
#include "cssam/model.hpp"
#include "cssam/retrieval.hpp"
#include "cssam/train.hpp"

namespace cssam::eval {

struct EvalRecord {
  std::string query_id;
  std::optional<std::size_t> frank;
  std::size_t pool_size = 0;
};

// Mean reciprocal rank; a missing frank counts as 0. Throws DataError on an
// empty list.
double mrr(const std::vector<EvalRecord>& records);
// Fraction of records with frank <= k.
double success_rate_at_k(const std::vector<EvalRecord>& records, std::size_t k);
// Mean of 1/log2(frank + 1) over records with frank <= k. With a single
// relevant item the ideal DCG is 1, so this DCG is already normalized.
double ndcg_at_k(const std::vector<EvalRecord>& records, std::size_t k);

enum class ScorerKind { kModel, kRandom, kOracle };

std::string to_string(ScorerKind kind);
ScorerKind scorer_from_string(const std::string& name);

struct EvalOptions {
  // Gold plus pool_size - 1 seeded distractors per query.
  std::size_t pool_size = 1000;
  // Rank every query against the whole test set instead.
  bool full_corpus = false;
  retrieval::Mode mode;
  std::uint64_t seed = 1;
  ScorerKind scorer = ScorerKind::kModel;
  int threads = 1;
};

struct EvalReport {
  std::string label;
  double sr1 = 0.0;
  double sr5 = 0.0;
  double sr10 = 0.0;
  double mrr = 0.0;
  double ndcg50 = 0.0;
  std::size_t query_count = 0;
  nlohmann::json config;
  std::string build_id;
  std::vector<EvalRecord> records;
};

// Identifier of the library build, taken from git when it was configured.
std::string build_id();

// Pool of query i: indices into the test set, gold first. Deterministic in
// (seed, i).
std::vector<std::size_t> sample_pool(std::size_t test_size, std::size_t query_index, std::size_t pool_size,
                                     std::uint64_t seed);

// Ranks each test record's docstring against its pool. The model scorer
// needs params and cfg; the random and oracle scorers ignore them.
EvalReport evaluate(const std::vector<dataset::Example>& test, const EvalOptions& opts,
                    const nn::ParamStore<float>* params = nullptr, const model::ModelConfig* cfg = nullptr);

// Summary metrics plus the per-query records.
nlohmann::json to_json(const EvalReport& report);
// Aligned columns: label, SR@1, SR@5, SR@10, MRR, NDCG@50.
std::string text_table(const std::vector<EvalReport>& rows);

struct AblationInputs {
  model::ModelConfig base;
  train::TrainConfig train;
  std::vector<dataset::Example> train_data;
  std::vector<dataset::Example> test_data;
  EvalOptions eval;
  std::uint64_t init_seed = 1;
  // Called on each freshly initialized variant, e.g. to load pretrained
  // embeddings.
  std::function<void(nn::ParamStore<float>&, const model::ModelConfig&)> prepare;
};

// Trains and evaluates each variant from the same seed and data. Rows carry
// the variant name as their label.
std::vector<EvalReport> ablation_run(const std::vector<model::ModelConfig>& variants, const AblationInputs& in);

}  // namespace cssam::eval
