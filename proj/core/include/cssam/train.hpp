#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cssam/dataset.hpp"
#include "cssam/model.hpp"
#include "cssam/tensor.hpp"

namespace cssam::train {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 100;
  double lr = 1e-4;
  double beta = 0.05;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  // Early stopping on validation MRR; 0 disables it.
  int patience = 0;

  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
void validate(const TrainConfig& cfg);

// Anchor record and the record whose docstring serves as the negative.
struct Triplet {
  std::size_t anchor = 0;
  std::size_t negative = 0;
};

// One negative per record, drawn uniformly from the other batch members
// whose id differs from the anchor's.
std::vector<Triplet> sample_triplets(const std::vector<std::string>& ids, std::mt19937_64& rng);
std::vector<Triplet> sample_triplets(const std::vector<corpus::CodeDocPair>& batch, std::uint64_t seed);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::map<std::string, nn::Mat<float>> m;
  std::map<std::string, nn::Mat<float>> v;

  bool operator==(const AdamState&) const = default;
};

// Bias-corrected Adam over every trainable tensor; tensors absent from
// grads see a zero gradient. Throws InvariantError naming the first tensor
// with a non-finite gradient, before any parameter changes.
void adam_step(nn::ParamStore<float>& params, const nn::Gradients<float>& grads, AdamState& state, double lr);

// Scales grads so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_global_norm(nn::Gradients<float>& grads, double max_norm);

struct EpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  double active_fraction = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> validation_mrr;
};

nlohmann::json to_json(const EpochMetrics& m);

class Trainer {
 public:
  Trainer(model::ModelConfig model_cfg, TrainConfig cfg, nn::ParamStore<float>& params, AdamState& state);

  // One pass over shuffled batches. Gradients of a batch are computed in a
  // fixed number of chunks and reduced in chunk order, so the result does
  // not depend on `threads`. The shuffle and dropout streams derive from
  // (seed, epoch), which makes resumed runs match uninterrupted ones.
  EpochMetrics train_epoch(const std::vector<dataset::Example>& data, int epoch, int threads = 1);

  // Loss terms of the batch without updating anything (dropout off).
  double batch_loss(const std::vector<dataset::Example>& data, const std::vector<Triplet>& triplets) const;

 private:
  model::ModelConfig model_cfg_;
  TrainConfig cfg_;
  nn::ParamStore<float>& params_;
  AdamState& state_;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;
using Validator = std::function<double()>;

// Runs epochs first_epoch..cfg.epochs. With patience > 0 and a validator,
// stops after `patience` epochs without improvement; either way the best
// parameters are restored. Throws InvariantError if any parameter turns
// non-finite.
std::vector<EpochMetrics> fit(const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                              const std::vector<dataset::Example>& data, nn::ParamStore<float>& params,
                              AdamState& state, int first_epoch = 1, int threads = 1,
                              const EpochCallback& on_epoch = {}, const Validator& validate = {});

void check_finite(const nn::ParamStore<float>& params);

// Checkpoint directory: manifest.json (format version, config echo, tensor
// table with shapes and offsets) and tensors.bin (little-endian float32).
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  model::ModelConfig model;
  TrainConfig train;
  nn::ParamStore<float> params;
  AdamState adam;
  int epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
// Throws CheckpointError on a version mismatch, a truncated blob or an
// inconsistent manifest.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace cssam::train
