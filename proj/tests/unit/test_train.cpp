#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cssam/error.hpp"
#include "cssam/train.hpp"
#include "fixtures.hpp"

namespace cssam::train {
namespace {

namespace fs = std::filesystem;
using cssam::testing::tiny_data;
using cssam::testing::tiny_model;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cssam_train_" + name);
  fs::remove_all(p);
  return p;
}

TEST(TrainConfigTest, JsonRoundTripAndValidation) {
  TrainConfig c;
  c.lr = 3e-4;
  EXPECT_EQ(train_config_from_json(to_json(c)), c);
  nlohmann::json j = to_json(c);
  j["learning_rate"] = 1;
  EXPECT_THROW(train_config_from_json(j), ConfigError);
  c.batch_size = 1;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(SampleTriplets, NegativeHasDifferentId) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> ids = {"a", "b", "a", "c"};
  for (int rep = 0; rep < 50; ++rep) {
    const auto ts = sample_triplets(ids, rng);
    ASSERT_EQ(ts.size(), ids.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      EXPECT_EQ(ts[i].anchor, i);
      EXPECT_NE(ids[ts[i].negative], ids[i]);
    }
  }
}

TEST(SampleTriplets, NeedsTwoDistinctIds) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_triplets(std::vector<std::string>{"a"}, rng), DataError);
}

TEST(SampleTriplets, SeededBatchOverloadIsDeterministic) {
  const std::vector<corpus::CodeDocPair> batch = {{"a", "", "", ""}, {"b", "", "", ""}, {"c", "", "", ""}};
  const auto t1 = sample_triplets(batch, 9), t2 = sample_triplets(batch, 9);
  for (std::size_t i = 0; i < t1.size(); ++i) EXPECT_EQ(t1[i].negative, t2[i].negative);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  nn::ParamStore<float> p;
  p.tensors["w"] = nn::Mat<float>::Constant(1, 3, 1.0f);
  AdamState s;
  nn::Gradients<float> g{{"w", (nn::Mat<float>(1, 3) << 0.5f, -2.0f, 1e-3f).finished()}};
  adam_step(p, g, s, 0.01);
  EXPECT_NEAR(p.at("w")(0, 0), 0.99f, 1e-6);
  EXPECT_NEAR(p.at("w")(0, 1), 1.01f, 1e-6);
  EXPECT_NEAR(p.at("w")(0, 2), 0.99f, 1e-5);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ConstantGradientKeepsStepSize) {
  // With a constant gradient the bias-corrected moments equal g and g², so
  // every step is lr in magnitude.
  nn::ParamStore<float> p;
  p.tensors["w"] = nn::Mat<float>::Zero(1, 1);
  AdamState s;
  const nn::Gradients<float> g{{"w", nn::Mat<float>::Constant(1, 1, 3.0f)}};
  for (int i = 0; i < 10; ++i) adam_step(p, g, s, 0.1);
  EXPECT_NEAR(p.at("w")(0, 0), -1.0f, 1e-5);
}

TEST(Adam, ZeroLearningRateLeavesParams) {
  nn::ParamStore<float> p;
  p.tensors["w"] = nn::Mat<float>::Constant(2, 2, 0.25f);
  const auto before = p.at("w");
  AdamState s;
  adam_step(p, {{"w", nn::Mat<float>::Ones(2, 2)}}, s, 0.0);
  EXPECT_TRUE(p.at("w") == before);
}

TEST(Adam, NonFiniteGradientNamesTensorAndChangesNothing) {
  nn::ParamStore<float> p;
  p.tensors["a"] = nn::Mat<float>::Ones(1, 1);
  p.tensors["b"] = nn::Mat<float>::Ones(1, 1);
  AdamState s;
  nn::Gradients<float> g{{"a", nn::Mat<float>::Ones(1, 1)},
                         {"b", nn::Mat<float>::Constant(1, 1, std::numeric_limits<float>::quiet_NaN())}};
  try {
    adam_step(p, g, s, 0.1);
    FAIL() << "expected an invariant error";
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find('b'), std::string::npos);
  }
  EXPECT_EQ(p.at("a")(0, 0), 1.0f);
  EXPECT_EQ(s.step, 0);
}

TEST(Adam, FrozenTensorsDoNotMove) {
  nn::ParamStore<float> p;
  p.tensors["w"] = nn::Mat<float>::Ones(1, 1);
  p.frozen.insert("w");
  AdamState s;
  adam_step(p, {}, s, 0.1);
  EXPECT_EQ(p.at("w")(0, 0), 1.0f);
}

TEST(ClipGlobalNorm, ScalesToMaximum) {
  nn::Gradients<float> g{{"a", nn::Mat<float>::Constant(1, 1, 3.0f)}, {"b", nn::Mat<float>::Constant(1, 1, 4.0f)}};
  EXPECT_NEAR(clip_global_norm(g, 1.0), 5.0, 1e-6);
  EXPECT_NEAR(g.at("a")(0, 0), 0.6f, 1e-6);
  EXPECT_NEAR(g.at("b")(0, 0), 0.8f, 1e-6);
  EXPECT_NEAR(clip_global_norm(g, 10.0), 1.0, 1e-6);
  EXPECT_NEAR(g.at("a")(0, 0), 0.6f, 1e-6);
}

TrainConfig quick_train() {
  TrainConfig t;
  t.batch_size = 8;
  t.epochs = 5;
  t.lr = 5e-3;
  t.beta = 0.05;
  t.seed = 4;
  return t;
}

TEST(Fit, LossDecreasesOverFirstEpochs) {
  const auto data = tiny_data(32);
  model::ModelConfig cfg = tiny_model(data.vocabs, 16);
  cfg.use_cress = cfg.use_csrg = cfg.use_attention = false;
  auto params = model::init_params(cfg, 1);
  AdamState state;
  const auto log = fit(cfg, quick_train(), data.examples, params, state);
  ASSERT_EQ(log.size(), 5u);
  EXPECT_LT(log.back().mean_loss, log.front().mean_loss);
  for (const auto& m : log) {
    EXPECT_GE(m.active_fraction, 0.0);
    EXPECT_LE(m.active_fraction, 1.0);
  }
}

TEST(Fit, ThreadCountDoesNotChangeResult) {
  const auto data = tiny_data(20);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  TrainConfig t = quick_train();
  t.epochs = 2;
  auto p1 = model::init_params(cfg, 1), p4 = p1;
  AdamState s1, s4;
  fit(cfg, t, data.examples, p1, s1, 1, 1);
  fit(cfg, t, data.examples, p4, s4, 1, 4);
  for (const auto& [name, m] : p1.tensors) EXPECT_TRUE(m == p4.at(name)) << name;
}

TEST(Fit, ZeroLearningRateKeepsParams) {
  const auto data = tiny_data(16);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  TrainConfig t = quick_train();
  t.lr = 0.0;
  t.epochs = 1;
  auto params = model::init_params(cfg, 1);
  const auto before = params;
  AdamState state;
  fit(cfg, t, data.examples, params, state);
  for (const auto& [name, m] : before.tensors) EXPECT_TRUE(m == params.at(name)) << name;
}

TEST(Fit, EarlyStoppingRestoresBest) {
  const auto data = tiny_data(16);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  TrainConfig t = quick_train();
  t.epochs = 10;
  t.patience = 2;
  auto params = model::init_params(cfg, 1);
  AdamState state;
  std::vector<nn::ParamStore<float>> snapshots;
  const std::vector<double> scores = {0.1, 0.5, 0.3, 0.2, 0.9};
  std::size_t calls = 0;
  const auto log = fit(
      cfg, t, data.examples, params, state, 1, 1, [&](const EpochMetrics&) { snapshots.push_back(params); },
      [&] { return scores[calls++]; });
  // Best is epoch 2; epochs 3 and 4 do not improve, so training stops.
  EXPECT_EQ(log.size(), 4u);
  ASSERT_GE(snapshots.size(), 2u);
  for (const auto& [name, m] : snapshots[1].tensors) EXPECT_TRUE(m == params.at(name)) << name;
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto data = tiny_data(12);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  Checkpoint ck{cfg, quick_train(), model::init_params(cfg, 1), {}, 0};
  fit(cfg, ck.train, data.examples, ck.params, ck.adam, 1, 1);
  ck.epoch = ck.train.epochs;
  ck.params.frozen.insert("embed.code");
  const fs::path dir = scratch("roundtrip");
  save_checkpoint(ck, dir);
  const Checkpoint back = load_checkpoint(dir);
  EXPECT_EQ(back.model, ck.model);
  EXPECT_EQ(back.train, ck.train);
  EXPECT_EQ(back.epoch, ck.epoch);
  EXPECT_EQ(back.adam, ck.adam);
  EXPECT_EQ(back.params.frozen, ck.params.frozen);
  for (const auto& [name, m] : ck.params.tensors) EXPECT_TRUE(m == back.params.at(name)) << name;
}

TEST(Checkpoint, VersionMismatchIsCheckpointError) {
  const auto data = tiny_data(4);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  const fs::path dir = scratch("version");
  save_checkpoint({cfg, {}, model::init_params(cfg, 1), {}, 0}, dir);
  nlohmann::json manifest;
  std::ifstream(dir / "manifest.json") >> manifest;
  manifest["format_version"] = kCheckpointVersion + 1;
  std::ofstream(dir / "manifest.json") << manifest.dump(2);
  EXPECT_THROW(load_checkpoint(dir), CheckpointError);
}

TEST(Checkpoint, TruncatedBlobIsCheckpointError) {
  const auto data = tiny_data(4);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  const fs::path dir = scratch("truncated");
  save_checkpoint({cfg, {}, model::init_params(cfg, 1), {}, 0}, dir);
  fs::resize_file(dir / "tensors.bin", fs::file_size(dir / "tensors.bin") - 4);
  EXPECT_THROW(load_checkpoint(dir), CheckpointError);
}

TEST(Checkpoint, MissingDirectoryIsCheckpointError) {
  EXPECT_THROW(load_checkpoint(scratch("missing")), CheckpointError);
}

TEST(Checkpoint, ShapeMismatchIsCheckpointError) {
  const auto data = tiny_data(4);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  auto params = model::init_params(cfg, 1);
  params.tensors["lstm.b"] = nn::Mat<float>::Zero(1, 3);
  const fs::path dir = scratch("shape");
  save_checkpoint({cfg, {}, params, {}, 0}, dir);
  EXPECT_THROW(load_checkpoint(dir), CheckpointError);
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  const auto data = tiny_data(16);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  TrainConfig t = quick_train();
  t.epochs = 2;
  auto straight = model::init_params(cfg, 1);
  AdamState straight_state;
  const auto log = fit(cfg, t, data.examples, straight, straight_state);

  TrainConfig first = t;
  first.epochs = 1;
  Checkpoint ck{cfg, t, model::init_params(cfg, 1), {}, 0};
  fit(cfg, first, data.examples, ck.params, ck.adam);
  ck.epoch = 1;
  const fs::path dir = scratch("resume");
  save_checkpoint(ck, dir);
  Checkpoint back = load_checkpoint(dir);
  const auto resumed = fit(cfg, t, data.examples, back.params, back.adam, back.epoch + 1);
  ASSERT_EQ(resumed.size(), 1u);
  EXPECT_EQ(resumed[0].mean_loss, log[1].mean_loss);
  for (const auto& [name, m] : straight.tensors) EXPECT_TRUE(m == back.params.at(name)) << name;
}

TEST(Checkpoint, ResumeWithZeroLearningRateReproducesMetrics) {
  const auto data = tiny_data(16);
  const model::ModelConfig cfg = tiny_model(data.vocabs);
  TrainConfig t = quick_train();
  t.epochs = 1;
  Checkpoint ck{cfg, t, model::init_params(cfg, 1), {}, 0};
  fit(cfg, t, data.examples, ck.params, ck.adam);
  const fs::path dir = scratch("resume_lr0");
  save_checkpoint(ck, dir);
  Checkpoint back = load_checkpoint(dir);
  TrainConfig frozen = t;
  frozen.lr = 0.0;
  frozen.epochs = 2;
  auto copy = ck.params;
  AdamState copy_state = ck.adam;
  const auto a = fit(cfg, frozen, data.examples, back.params, back.adam, 2);
  const auto b = fit(cfg, frozen, data.examples, copy, copy_state, 2);
  EXPECT_EQ(a[0].mean_loss, b[0].mean_loss);
  for (const auto& [name, m] : ck.params.tensors) EXPECT_TRUE(m == back.params.at(name)) << name;
}

}  // namespace
}  // namespace cssam::train
