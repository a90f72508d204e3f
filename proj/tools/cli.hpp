#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cssam/dataset.hpp"
#include "cssam/eval.hpp"
#include "cssam/model.hpp"
#include "cssam/train.hpp"

namespace cssam::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kCheckpoint = 4, kInvariant = 5 };

struct EvalSettings {
  std::size_t pool_size = 1000;
  bool full_corpus = false;
  std::string mode = "exhaustive";
  std::size_t top_n = 100;
  std::string scorer = "model";
  std::vector<std::size_t> k = {1, 5, 10};
  std::size_t top_k = 10;  // results printed by search
};

// Everything a pipeline run needs. Loaded from JSON with unknown keys
// rejected; command-line flags override file values.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path workdir = "cssam_work";
  std::filesystem::path checkpoint;  // empty: <workdir>/checkpoint
  std::uint64_t seed = 1;
  int threads = 0;                   // 0: all hardware threads
  double test_fraction = 0.1;
  double validation_fraction = 0.1;  // carved from train only when patience > 0
  dataset::FeatureConfig features;
  dataset::PretrainConfig pretrain;
  bool use_pretrained = true;
  model::ModelConfig model;
  train::TrainConfig train;
  EvalSettings eval;

  std::filesystem::path checkpoint_dir() const { return checkpoint.empty() ? workdir / "checkpoint" : checkpoint; }
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
void validate(const RunConfig& cfg);

// Parses argv, runs the selected command and returns its exit code. Logs go
// to err, command output to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cssam::cli
