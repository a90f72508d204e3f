#include <cmath>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cssam/error.hpp"
#include "cssam/eval.hpp"
#include "fixtures.hpp"

namespace cssam::eval {
namespace {

using cssam::testing::tiny_data;
using cssam::testing::tiny_model;

std::vector<EvalRecord> records(std::initializer_list<std::optional<std::size_t>> ranks) {
  std::vector<EvalRecord> out;
  for (const auto& r : ranks) out.push_back({"q" + std::to_string(out.size()), r, 10});
  return out;
}

TEST(Metrics, MrrOfOneTwoFour) { EXPECT_NEAR(mrr(records({1, 2, 4})), 0.58333, 1e-5); }

TEST(Metrics, NdcgGainAtRankThree) { EXPECT_NEAR(ndcg_at_k(records({3}), 10), 0.5, 1e-15); }

TEST(Metrics, SuccessRate) {
  const auto r = records({1, 2, 4, std::nullopt});
  EXPECT_DOUBLE_EQ(success_rate_at_k(r, 1), 0.25);
  EXPECT_DOUBLE_EQ(success_rate_at_k(r, 2), 0.5);
  EXPECT_DOUBLE_EQ(success_rate_at_k(r, 10), 0.75);
}

TEST(Metrics, MissingRankCountsZero) {
  EXPECT_DOUBLE_EQ(mrr(records({std::nullopt, 1})), 0.5);
  EXPECT_DOUBLE_EQ(ndcg_at_k(records({std::nullopt}), 5), 0.0);
}

TEST(Metrics, RankBeyondKGetsNoNdcg) { EXPECT_DOUBLE_EQ(ndcg_at_k(records({11}), 10), 0.0); }

TEST(Metrics, ErrorsOnEmptyOrZeroK) {
  EXPECT_THROW(mrr({}), DataError);
  EXPECT_THROW(success_rate_at_k(records({1}), 0), ConfigError);
  EXPECT_THROW(ndcg_at_k(records({1}), 0), ConfigError);
}

TEST(SamplePool, GoldFirstAndDistinct) {
  const auto pool = sample_pool(50, 7, 20, 3);
  ASSERT_EQ(pool.size(), 20u);
  EXPECT_EQ(pool[0], 7u);
  EXPECT_EQ(std::set<std::size_t>(pool.begin(), pool.end()).size(), 20u);
  EXPECT_EQ(pool, sample_pool(50, 7, 20, 3));
  EXPECT_NE(pool, sample_pool(50, 7, 20, 4));
}

TEST(SamplePool, OversizedPoolIsConfigError) { EXPECT_THROW(sample_pool(10, 0, 11, 1), ConfigError); }

std::vector<dataset::Example> fake_test_set(std::size_t n) {
  std::vector<dataset::Example> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].id = "t" + std::to_string(i);
  return out;
}

TEST(Evaluate, OracleScoresPerfectly) {
  EvalOptions opts;
  opts.pool_size = 20;
  opts.scorer = ScorerKind::kOracle;
  const EvalReport r = evaluate(fake_test_set(40), opts);
  EXPECT_DOUBLE_EQ(r.mrr, 1.0);
  EXPECT_DOUBLE_EQ(r.sr1, 1.0);
  EXPECT_DOUBLE_EQ(r.ndcg50, 1.0);
  EXPECT_EQ(r.label, "oracle");
  EXPECT_EQ(r.query_count, 40u);
}

TEST(Evaluate, RandomScorerNearHarmonicExpectation) {
  // Gold uniformly placed among n candidates: E[1/rank] = H_n / n.
  EvalOptions opts;
  opts.pool_size = 50;
  opts.scorer = ScorerKind::kRandom;
  const EvalReport r = evaluate(fake_test_set(400), opts);
  double h = 0.0;
  for (int i = 1; i <= 50; ++i) h += 1.0 / i;
  EXPECT_NEAR(r.mrr, h / 50.0, 0.03);
  EXPECT_NEAR(r.sr1, 1.0 / 50.0, 0.02);
}

TEST(Evaluate, DeterministicAcrossThreads) {
  EvalOptions opts;
  opts.pool_size = 30;
  opts.scorer = ScorerKind::kRandom;
  opts.threads = 1;
  const EvalReport a = evaluate(fake_test_set(60), opts);
  opts.threads = 4;
  const EvalReport b = evaluate(fake_test_set(60), opts);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Evaluate, PoolLargerThanTestSetIsConfigError) {
  EvalOptions opts;
  opts.scorer = ScorerKind::kOracle;
  opts.pool_size = 1000;
  EXPECT_THROW(evaluate(fake_test_set(10), opts), ConfigError);
  opts.full_corpus = true;
  EXPECT_EQ(evaluate(fake_test_set(10), opts).records[0].pool_size, 10u);
}

TEST(Evaluate, ModelScorerNeedsParams) {
  EvalOptions opts;
  opts.pool_size = 5;
  EXPECT_THROW(evaluate(fake_test_set(10), opts), ConfigError);
}

TEST(Evaluate, ModelScorerReport) {
  const auto data = tiny_data(10);
  const auto cfg = tiny_model(data.vocabs);
  const auto params = model::init_params(cfg, 1);
  EvalOptions opts;
  opts.pool_size = 5;
  const EvalReport r = evaluate(data.examples, opts, &params, &cfg);
  EXPECT_EQ(r.label, "Base+CRESS+CSRG+Attn");
  const nlohmann::json j = to_json(r);
  for (const char* key : {"SR@1", "SR@5", "SR@10", "MRR", "NDCG@50", "config", "build_id", "records"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("config").at("pool_size"), 5);
  EXPECT_TRUE(j.at("config").contains("model"));
}

TEST(TextTable, AlignedColumns) {
  EvalReport a;
  a.label = "Base";
  a.mrr = 0.5;
  EvalReport b;
  b.label = "Base+CRESS+CSRG+Attn";
  b.sr1 = 1.0;
  const std::string t = text_table({a, b});
  EXPECT_NE(t.find("Model"), std::string::npos);
  EXPECT_NE(t.find("0.5000"), std::string::npos);
  EXPECT_NE(t.find("1.0000"), std::string::npos);
  std::size_t lines = 0, width = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != '\n') continue;
    if (lines++ == 0) {
      width = i - start;
    } else {
      EXPECT_EQ(i - start, width);
    }
    start = i + 1;
  }
  EXPECT_EQ(lines, 3u);
}

TEST(Ablation, FiveLabelledRows) {
  const auto data = tiny_data(16);
  AblationInputs in;
  in.base = tiny_model(data.vocabs);
  in.train.batch_size = 8;
  in.train.epochs = 1;
  in.train_data = data.examples;
  in.test_data = data.examples;
  in.eval.pool_size = 8;
  const auto rows = ablation_run(model::ablation_variants(in.base), in);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].label, "Base");
  EXPECT_EQ(rows[4].label, "Base+CRESS+CSRG+Attn");
}

}  // namespace
}  // namespace cssam::eval
