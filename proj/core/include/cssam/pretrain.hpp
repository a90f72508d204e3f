#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "cssam/graph.hpp"
#include "cssam/tensor.hpp"

namespace cssam::pretrain {

// Key -> row lookup over a float matrix. Missing keys fall back to the
// "<UNK>" row when the table has one, otherwise to the mean row.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> keys, nn::Mat<float> matrix);

  int dim() const { return static_cast<int>(matrix_.cols()); }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }
  const nn::Mat<float>& matrix() const { return matrix_; }
  bool contains(const std::string& key) const { return index_.count(key) != 0; }
  Eigen::RowVectorXf lookup(const std::string& key) const;
  Eigen::RowVectorXf mean() const;

  // Writes <stem>.json ({dim, count, keys}) and <stem>.bin (row-major
  // little-endian float32).
  void save(const std::filesystem::path& stem) const;
  static EmbeddingTable load(const std::filesystem::path& stem);

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, int> index_;
  nn::Mat<float> matrix_;
};

// Character n-grams of "<token>" for n in [n_min, n_max], ordered by n then
// position, followed by the whole marked token.
std::vector<std::string> subword_ngrams(const std::string& token, int n_min, int n_max);

struct SkipGramConfig {
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr = 0.05;
  int n_min = 3;
  int n_max = 5;
  bool subwords = true;
  std::uint64_t seed = 1;
};

// Negative-sampling skip-gram over integer sequences. Word w's input vector
// is the mean of the input rows listed in features[w].
class SkipGram {
 public:
  SkipGram(std::vector<std::vector<int>> features, int input_rows, std::vector<std::uint64_t> counts, int dim,
           std::uint64_t seed);

  // One pass over the corpus; returns the mean loss per (center, context)
  // pair.
  double train_epoch(const std::vector<std::vector<int>>& corpus, const SkipGramConfig& cfg, double lr_begin,
                     double lr_end, std::mt19937_64& rng);

  // Loss -log σ(h·o_t) - Σ log σ(-h·o_n) for one center word, and its
  // gradients with respect to the input and output matrices.
  double pair_loss(int center, int target, const std::vector<int>& negatives, nn::Mat<double>* d_input,
                   nn::Mat<double>* d_output) const;

  Eigen::RowVectorXd word_vector(int w) const;
  nn::Mat<double>& input() { return input_; }
  nn::Mat<double>& output() { return output_; }
  int vocab_size() const { return static_cast<int>(features_.size()); }

 private:
  int sample_negative(std::mt19937_64& rng) const;

  std::vector<std::vector<int>> features_;
  nn::Mat<double> input_;
  nn::Mat<double> output_;
  std::vector<double> cumulative_;  // unigram^0.75 CDF
};

// Trains subword skip-gram over token sentences. Keys of the result are
// every distinct token, ordered by (frequency desc, token asc).
EmbeddingTable train_token_embeddings(const std::vector<std::vector<std::string>>& corpus, int dim,
                                      const SkipGramConfig& cfg, std::vector<double>* epoch_losses = nullptr);

struct WalkParams {
  int gamma = 10;
  int t = 20;
  std::uint64_t seed = 1;
};

struct WalkSet {
  std::vector<std::vector<int>> walks;
  WalkParams params;
};

// Undirected, unweighted adjacency with sorted unique neighbours.
std::vector<std::vector<int>> walk_adjacency(const graph::Csrg& g);

// gamma passes over a shuffled vertex order, one truncated uniform walk per
// vertex and pass.
WalkSet random_walks(const std::vector<std::vector<int>>& adjacency, const WalkParams& params);
WalkSet random_walks(const graph::Csrg& g, int gamma, int t, std::uint64_t seed);

// Plain skip-gram over walk sequences with node ids in [0, keys.size()).
EmbeddingTable train_node_embeddings(const WalkSet& walks, const std::vector<std::string>& keys, int dim,
                                     const SkipGramConfig& cfg);

}  // namespace cssam::pretrain
