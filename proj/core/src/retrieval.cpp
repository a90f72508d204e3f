#include "cssam/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cssam/error.hpp"
#include "cssam/parallel.hpp"

namespace cssam::retrieval {

namespace {

bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

Eigen::RowVectorXd row(const nn::Tape<float>& tape, nn::Var v) { return tape.value(v).row(0).cast<double>(); }

}  // namespace

std::string to_string(const Mode& mode) {
  if (mode.kind == Mode::Kind::kExhaustive) return "exhaustive";
  return "two_stage(" + std::to_string(mode.top_n) + ")";
}

RankedResult rank(std::string query_id, std::vector<ScoredCandidate> scored, const std::optional<std::string>& gold_id) {
  if (scored.empty()) throw DataError("rank: empty candidate list");
  for (const auto& c : scored) {
    if (!std::isfinite(c.score)) throw DataError("rank: non-finite score for candidate " + c.id);
  }
  std::sort(scored.begin(), scored.end(), ranks_before);
  RankedResult out{std::move(query_id), std::move(scored), std::nullopt};
  if (gold_id) {
    for (std::size_t i = 0; i < out.ranked.size(); ++i) {
      if (out.ranked[i].id == *gold_id) {
        out.frank = i + 1;
        break;
      }
    }
  }
  return out;
}

RankedResult score_all(const Query& query, const std::vector<const dataset::Example*>& pool,
                       const nn::ParamStore<float>& params, const model::ModelConfig& cfg, const Mode& mode,
                       int threads) {
  if (pool.empty()) throw DataError("score_all: empty pool");
  if (query.token_ids.empty()) throw DataError("score_all: query has no tokens");
  std::vector<const dataset::Example*> rescore = pool;

  if (mode.kind == Mode::Kind::kTwoStage) {
    if (!cfg.use_csrg) throw ConfigError("two-stage retrieval needs the CSRG branch");
    if (mode.top_n < 1) throw ConfigError("two-stage top_n must be at least 1");
    Eigen::RowVectorXd docs;
    {
      nn::Tape<float> tape(&params, false);
      docs = row(tape, model::encode_docs_lstm(tape, cfg, query.token_ids));
    }
    std::vector<ScoredCandidate> first(pool.size());
    parallel_for(pool.size(), threads, [&](std::size_t i) {
      nn::Tape<float> tape(&params, false);
      first[i] = {pool[i]->id, model::similarity(row(tape, model::encode_csrg(tape, cfg, pool[i]->graph)), docs)};
    });
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ranks_before(first[a], first[b]); });
    order.resize(std::min(order.size(), mode.top_n));
    rescore.clear();
    for (std::size_t i : order) rescore.push_back(pool[i]);
  }

  std::vector<ScoredCandidate> scored(rescore.size());
  parallel_for(rescore.size(), threads, [&](std::size_t i) {
    scored[i] = {rescore[i]->id, model::score(params, cfg, *rescore[i], query.token_ids)};
  });
  return rank(query.id, std::move(scored), query.gold_id);
}

RankedResult top_k(const RankedResult& result, std::size_t k) {
  if (k < 1) throw ConfigError("top_k: k must be at least 1");
  RankedResult out = result;
  if (out.ranked.size() > k) out.ranked.resize(k);
  if (out.frank && *out.frank > k) out.frank.reset();
  return out;
}

std::string snippet_preview(const std::string& code) {
  std::size_t chars = 0;
  std::size_t i = 0;
  while (i < code.size() && chars < kPreviewChars) {
    const auto lead = static_cast<unsigned char>(code[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    i = std::min(code.size(), i + len);
    ++chars;
  }
  return code.substr(0, i);
}

nlohmann::json to_json(const std::string& query_text, const RankedResult& result,
                       const std::vector<const dataset::Example*>& pool) {
  std::map<std::string, const dataset::Example*> by_id;
  for (const auto* e : pool) by_id.emplace(e->id, e);
  nlohmann::json results = nlohmann::json::array();
  for (const auto& c : result.ranked) {
    const auto it = by_id.find(c.id);
    results.push_back({{"id", c.id},
                       {"score", c.score},
                       {"snippet_preview", it == by_id.end() ? std::string() : snippet_preview(it->second->code)}});
  }
  return {{"query", query_text}, {"results", results}};
}

}  // namespace cssam::retrieval
