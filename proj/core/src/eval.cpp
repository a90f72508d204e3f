#include "cssam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "cssam/error.hpp"
#include "cssam/parallel.hpp"

#ifndef CSSAM_BUILD_ID
#define CSSAM_BUILD_ID "unknown"
#endif

namespace cssam::eval {

namespace {

void require_records(const std::vector<EvalRecord>& records, const char* what) {
  if (records.empty()) throw DataError(std::string(what) + ": no records");
}

std::mt19937_64 query_rng(std::uint64_t seed, std::size_t query_index, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(query_index), static_cast<std::uint32_t>(query_index >> 32), stream};
  return std::mt19937_64(seq);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

double mrr(const std::vector<EvalRecord>& records) {
  require_records(records, "mrr");
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.frank) sum += 1.0 / static_cast<double>(*r.frank);
  }
  return sum / static_cast<double>(records.size());
}

double success_rate_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
  require_records(records, "success_rate_at_k");
  if (k < 1) throw ConfigError("success_rate_at_k: k must be at least 1");
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (r.frank && *r.frank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double ndcg_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
  require_records(records, "ndcg_at_k");
  if (k < 1) throw ConfigError("ndcg_at_k: k must be at least 1");
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.frank && *r.frank <= k) sum += 1.0 / std::log2(static_cast<double>(*r.frank) + 1.0);
  }
  return sum / static_cast<double>(records.size());
}

std::string to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kModel: return "model";
    case ScorerKind::kRandom: return "random";
    case ScorerKind::kOracle: return "oracle";
  }
  return "model";
}

ScorerKind scorer_from_string(const std::string& name) {
  if (name == "model") return ScorerKind::kModel;
  if (name == "random") return ScorerKind::kRandom;
  if (name == "oracle") return ScorerKind::kOracle;
  throw ConfigError("unknown scorer '" + name + "' (expected model, random or oracle)");
}

std::string build_id() { return CSSAM_BUILD_ID; }

std::vector<std::size_t> sample_pool(std::size_t test_size, std::size_t query_index, std::size_t pool_size,
                                     std::uint64_t seed) {
  if (query_index >= test_size) throw ConfigError("sample_pool: query index out of range");
  if (pool_size < 1 || pool_size > test_size) {
    throw ConfigError("pool size " + std::to_string(pool_size) + " must be between 1 and the test set size " +
                      std::to_string(test_size));
  }
  std::vector<std::size_t> others;
  others.reserve(test_size - 1);
  for (std::size_t i = 0; i < test_size; ++i) {
    if (i != query_index) others.push_back(i);
  }
  auto rng = query_rng(seed, query_index, 1);
  std::vector<std::size_t> pool{query_index};
  for (std::size_t j = 0; j + 1 < pool_size; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, others.size() - 1);
    std::swap(others[j], others[pick(rng)]);
    pool.push_back(others[j]);
  }
  return pool;
}

EvalReport evaluate(const std::vector<dataset::Example>& test, const EvalOptions& opts,
                    const nn::ParamStore<float>* params, const model::ModelConfig* cfg) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  if (opts.scorer == ScorerKind::kModel && (params == nullptr || cfg == nullptr)) {
    throw ConfigError("evaluate: the model scorer needs parameters and a model config");
  }
  const std::size_t pool_size = opts.full_corpus ? test.size() : opts.pool_size;
  if (pool_size < 1 || pool_size > test.size()) {
    throw ConfigError("pool size " + std::to_string(pool_size) + " exceeds the " + std::to_string(test.size()) +
                      " test records; lower it or use the full test set");
  }

  std::vector<EvalRecord> records(test.size());
  parallel_for(test.size(), opts.threads, [&](std::size_t q) {
    std::vector<std::size_t> members;
    if (opts.full_corpus) {
      members.resize(test.size());
      std::iota(members.begin(), members.end(), 0);
    } else {
      members = sample_pool(test.size(), q, pool_size, opts.seed);
    }
    retrieval::RankedResult result;
    if (opts.scorer == ScorerKind::kModel) {
      std::vector<const dataset::Example*> pool;
      for (std::size_t i : members) pool.push_back(&test[i]);
      result = retrieval::score_all({test[q].id, test[q].query_ids, test[q].id}, pool, *params, *cfg, opts.mode, 1);
    } else {
      auto rng = query_rng(opts.seed, q, 2);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<retrieval::ScoredCandidate> scored;
      for (std::size_t i : members) {
        const double s = opts.scorer == ScorerKind::kRandom ? unit(rng) : (i == q ? 1.0 : 0.0);
        scored.push_back({test[i].id, s});
      }
      result = retrieval::rank(test[q].id, std::move(scored), test[q].id);
    }
    records[q] = {test[q].id, result.frank, pool_size};
  });

  EvalReport report;
  report.label = opts.scorer == ScorerKind::kModel ? model::variant_name(*cfg) : to_string(opts.scorer);
  report.sr1 = success_rate_at_k(records, 1);
  report.sr5 = success_rate_at_k(records, 5);
  report.sr10 = success_rate_at_k(records, 10);
  report.mrr = mrr(records);
  report.ndcg50 = ndcg_at_k(records, 50);
  report.query_count = records.size();
  report.config = {{"pool", opts.full_corpus ? "full_test_set" : "sampled"},
                   {"pool_size", pool_size},
                   {"mode", retrieval::to_string(opts.mode)},
                   {"scorer", to_string(opts.scorer)},
                   {"seed", opts.seed}};
  if (cfg != nullptr && opts.scorer == ScorerKind::kModel) report.config["model"] = model::to_json(*cfg);
  report.build_id = build_id();
  report.records = std::move(records);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    records.push_back({{"query_id", r.query_id},
                       {"frank", r.frank ? nlohmann::json(*r.frank) : nlohmann::json(nullptr)},
                       {"pool_size", r.pool_size}});
  }
  return {{"label", report.label},
          {"SR@1", report.sr1},
          {"SR@5", report.sr5},
          {"SR@10", report.sr10},
          {"MRR", report.mrr},
          {"NDCG@50", report.ndcg50},
          {"query_count", report.query_count},
          {"config", report.config},
          {"build_id", report.build_id},
          {"records", records}};
}

std::string text_table(const std::vector<EvalReport>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::ostringstream out;
  auto cell = [&](const std::string& s, std::size_t w, bool left) {
    if (left) {
      out << s << std::string(w > s.size() ? w - s.size() : 0, ' ');
    } else {
      out << std::string(w > s.size() ? w - s.size() : 0, ' ') << s;
    }
  };
  const std::vector<std::string> heads = {"SR@1", "SR@5", "SR@10", "MRR", "NDCG@50"};
  cell("Model", width, true);
  for (const auto& h : heads) {
    out << "  ";
    cell(h, 7, false);
  }
  out << '\n';
  for (const auto& r : rows) {
    cell(r.label, width, true);
    for (double v : {r.sr1, r.sr5, r.sr10, r.mrr, r.ndcg50}) {
      out << "  ";
      cell(fixed4(v), 7, false);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<EvalReport> ablation_run(const std::vector<model::ModelConfig>& variants, const AblationInputs& in) {
  std::vector<EvalReport> rows;
  for (const auto& cfg : variants) {
    nn::ParamStore<float> params = model::init_params(cfg, in.init_seed);
    if (in.prepare) in.prepare(params, cfg);
    train::AdamState state;
    train::fit(cfg, in.train, in.train_data, params, state, 1, in.eval.threads);
    rows.push_back(evaluate(in.test_data, in.eval, &params, &cfg));
  }
  return rows;
}

}  // namespace cssam::eval
