#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cssam/dataset.hpp"
#include "cssam/model.hpp"
#include "cssam/tensor.hpp"

namespace cssam::retrieval {

struct ScoredCandidate {
  std::string id;
  double score = 0.0;
};

struct RankedResult {
  std::string query_id;
  // Scores non-increasing; equal scores ordered by id ascending.
  std::vector<ScoredCandidate> ranked;
  // 1-based rank of the gold candidate; empty when it is not in the list.
  std::optional<std::size_t> frank;
};

struct Mode {
  enum class Kind { kExhaustive, kTwoStage };
  Kind kind = Kind::kExhaustive;
  std::size_t top_n = 100;

  static Mode exhaustive() { return {}; }
  static Mode two_stage(std::size_t top_n = 100) { return {Kind::kTwoStage, top_n}; }
};

std::string to_string(const Mode& mode);

// Sorts (id, score) pairs by score descending, then id ascending, and locates
// the gold id. Throws DataError on an empty list or a non-finite score.
RankedResult rank(std::string query_id, std::vector<ScoredCandidate> scored,
                  const std::optional<std::string>& gold_id = std::nullopt);

struct Query {
  std::string id;
  std::vector<int> token_ids;
  std::optional<std::string> gold_id;
};

// Scores every pool member against the query. Exhaustive mode runs the full
// pair encoder on each candidate. Two-stage mode ranks the pool by the cosine
// between the query-independent CSRG branch and the query LSTM branch, then
// re-scores the best top_n with the full model; only the re-scored set is
// returned, so a gold candidate cut in the first stage has no frank. Two-stage
// needs the CSRG branch and throws ConfigError without it.
RankedResult score_all(const Query& query, const std::vector<const dataset::Example*>& pool,
                       const nn::ParamStore<float>& params, const model::ModelConfig& cfg, const Mode& mode = {},
                       int threads = 1);

// The first min(k, size) entries. k must be at least 1.
RankedResult top_k(const RankedResult& result, std::size_t k);

inline constexpr std::size_t kPreviewChars = 200;

// Cuts at kPreviewChars code points without splitting a UTF-8 sequence.
std::string snippet_preview(const std::string& code);

// {query, results: [{id, score, snippet_preview}]}; snippets are looked up
// by id in pool.
nlohmann::json to_json(const std::string& query_text, const RankedResult& result,
                       const std::vector<const dataset::Example*>& pool);

}  // namespace cssam::retrieval
