#include <algorithm>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cssam/error.hpp"
#include "cssam/retrieval.hpp"
#include "fixtures.hpp"

namespace cssam::retrieval {
namespace {

using cssam::testing::tiny_data;
using cssam::testing::tiny_model;

TEST(Rank, TiesBreakById) {
  const RankedResult r = rank("q", {{"c", 0.5}, {"a", 0.5}, {"b", 0.9}}, std::string("a"));
  ASSERT_EQ(r.ranked.size(), 3u);
  EXPECT_EQ(r.ranked[0].id, "b");
  EXPECT_EQ(r.ranked[1].id, "a");
  EXPECT_EQ(r.ranked[2].id, "c");
  EXPECT_EQ(r.frank, 2u);
}

TEST(Rank, PermutationInvariant) {
  std::vector<ScoredCandidate> scored;
  for (int i = 0; i < 30; ++i) scored.push_back({"id" + std::to_string(i), static_cast<double>(i % 7)});
  const RankedResult base = rank("q", scored, std::string("id3"));
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    std::shuffle(scored.begin(), scored.end(), rng);
    const RankedResult r = rank("q", scored, std::string("id3"));
    EXPECT_EQ(r.frank, base.frank);
    for (std::size_t i = 0; i < r.ranked.size(); ++i) EXPECT_EQ(r.ranked[i].id, base.ranked[i].id);
  }
}

TEST(Rank, MissingGoldHasNoRank) { EXPECT_FALSE(rank("q", {{"a", 1.0}}, std::string("z")).frank); }

TEST(Rank, EmptyAndNonFiniteRejected) {
  EXPECT_THROW(rank("q", {}, std::nullopt), DataError);
  EXPECT_THROW(rank("q", {{"a", std::nan("")}}, std::nullopt), DataError);
}

TEST(TopK, TruncatesAndDropsRankBeyondK) {
  const RankedResult r = rank("q", {{"a", 3}, {"b", 2}, {"c", 1}}, std::string("c"));
  const RankedResult t = top_k(r, 2);
  EXPECT_EQ(t.ranked.size(), 2u);
  EXPECT_FALSE(t.frank);
  EXPECT_EQ(top_k(r, 5).ranked.size(), 3u);
  EXPECT_THROW(top_k(r, 0), ConfigError);
}

TEST(SnippetPreview, CountsCodePoints) {
  std::string s;
  for (int i = 0; i < 250; ++i) s += "\xC3\xA9";  // é, two bytes
  const std::string p = snippet_preview(s);
  EXPECT_EQ(p.size(), 2 * kPreviewChars);
  EXPECT_EQ(snippet_preview("short"), "short");
}

class ScoreAllTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = tiny_data(12);
    cfg_ = tiny_model(data_.vocabs);
    params_ = model::init_params(cfg_, 3);
    for (const auto& e : data_.examples) pool_.push_back(&e);
  }
  Query query(std::size_t i) const {
    return {data_.examples[i].id, data_.examples[i].query_ids, data_.examples[i].id};
  }
  cssam::testing::TinyData data_;
  model::ModelConfig cfg_;
  nn::ParamStore<float> params_;
  std::vector<const dataset::Example*> pool_;
};

TEST_F(ScoreAllTest, ExhaustiveScoresWholePool) {
  const RankedResult r = score_all(query(0), pool_, params_, cfg_, Mode::exhaustive(), 2);
  EXPECT_EQ(r.ranked.size(), pool_.size());
  ASSERT_TRUE(r.frank);
  for (std::size_t i = 1; i < r.ranked.size(); ++i) EXPECT_GE(r.ranked[i - 1].score, r.ranked[i].score);
}

TEST_F(ScoreAllTest, ThreadCountDoesNotMatter) {
  const RankedResult a = score_all(query(1), pool_, params_, cfg_, Mode::exhaustive(), 1);
  const RankedResult b = score_all(query(1), pool_, params_, cfg_, Mode::exhaustive(), 4);
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    EXPECT_EQ(a.ranked[i].id, b.ranked[i].id);
    EXPECT_EQ(a.ranked[i].score, b.ranked[i].score);
  }
}

TEST_F(ScoreAllTest, TwoStageWithFullShortlistEqualsExhaustive) {
  const RankedResult a = score_all(query(2), pool_, params_, cfg_, Mode::exhaustive(), 1);
  const RankedResult b = score_all(query(2), pool_, params_, cfg_, Mode::two_stage(pool_.size()), 1);
  ASSERT_EQ(a.ranked.size(), b.ranked.size());
  for (std::size_t i = 0; i < a.ranked.size(); ++i) EXPECT_EQ(a.ranked[i].id, b.ranked[i].id);
  EXPECT_EQ(a.frank, b.frank);
}

TEST_F(ScoreAllTest, TwoStageShortlistSize) {
  const RankedResult r = score_all(query(2), pool_, params_, cfg_, Mode::two_stage(4), 1);
  EXPECT_EQ(r.ranked.size(), 4u);
}

TEST_F(ScoreAllTest, TwoStageNeedsCsrg) {
  cfg_.use_csrg = false;
  params_ = model::init_params(cfg_, 3);
  EXPECT_THROW(score_all(query(0), pool_, params_, cfg_, Mode::two_stage(3), 1), ConfigError);
}

TEST_F(ScoreAllTest, EmptyPoolRejected) {
  EXPECT_THROW(score_all(query(0), {}, params_, cfg_, Mode::exhaustive(), 1), DataError);
}

TEST_F(ScoreAllTest, JsonHasPreviews) {
  const RankedResult r = top_k(score_all(query(0), pool_, params_, cfg_, Mode::exhaustive(), 1), 3);
  const nlohmann::json j = to_json("some query", r, pool_);
  EXPECT_EQ(j.at("query"), "some query");
  ASSERT_EQ(j.at("results").size(), 3u);
  EXPECT_FALSE(j.at("results")[0].at("snippet_preview").get<std::string>().empty());
  EXPECT_EQ(to_string(Mode::two_stage(7)), "two_stage(7)");
}

}  // namespace
}  // namespace cssam::retrieval
