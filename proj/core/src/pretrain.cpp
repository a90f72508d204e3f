#include "cssam/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "cssam/error.hpp"

namespace cssam::pretrain {

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(std::vector<std::string> keys, nn::Mat<float> matrix)
    : keys_(std::move(keys)), matrix_(std::move(matrix)) {
  if (static_cast<Eigen::Index>(keys_.size()) != matrix_.rows()) {
    throw ShapeError("embedding table: " + std::to_string(keys_.size()) + " keys for " +
                     std::to_string(matrix_.rows()) + " rows");
  }
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (!index_.emplace(keys_[i], static_cast<int>(i)).second) throw DataError("duplicate embedding key " + keys_[i]);
  }
}

Eigen::RowVectorXf EmbeddingTable::mean() const {
  if (matrix_.rows() == 0) return Eigen::RowVectorXf::Zero(matrix_.cols());
  return matrix_.colwise().mean();
}

Eigen::RowVectorXf EmbeddingTable::lookup(const std::string& key) const {
  auto it = index_.find(key);
  if (it != index_.end()) return matrix_.row(it->second);
  auto unk = index_.find("<UNK>");
  if (unk != index_.end()) return matrix_.row(unk->second);
  return mean();
}

void EmbeddingTable::save(const std::filesystem::path& stem) const {
  auto manifest = detail::open_for_write(std::filesystem::path(stem).concat(".json"), false);
  manifest << nlohmann::json{{"dim", dim()}, {"count", size()}, {"keys", keys_}}.dump() << '\n';
  auto blob = detail::open_for_write(std::filesystem::path(stem).concat(".bin"), true);
  detail::write_f32(blob, matrix_.data(), static_cast<std::size_t>(matrix_.size()));
  if (!blob || !manifest) throw IoError("failed writing embedding table " + stem.string());
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& stem) {
  const auto manifest_path = std::filesystem::path(stem).concat(".json");
  const auto text = detail::read_file(manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed embedding manifest " + manifest_path.string() + ": " + e.what());
  }
  const int dim = j.at("dim").get<int>();
  auto keys = j.at("keys").get<std::vector<std::string>>();
  if (j.at("count").get<std::size_t>() != keys.size()) throw DataError("embedding manifest count mismatch");
  const auto blob = detail::read_file(std::filesystem::path(stem).concat(".bin"));
  nn::Mat<float> m(static_cast<Eigen::Index>(keys.size()), dim);
  if (blob.size() != static_cast<std::size_t>(m.size()) * sizeof(float)) {
    throw DataError("embedding blob size does not match manifest for " + stem.string());
  }
  detail::read_f32(blob, 0, m.data(), static_cast<std::size_t>(m.size()));
  return EmbeddingTable(std::move(keys), std::move(m));
}

// ---------------------------------------------------------------------------
// Subword skip-gram

std::vector<std::string> subword_ngrams(const std::string& token, int n_min, int n_max) {
  if (n_min < 1 || n_max < n_min) throw ConfigError("subword_ngrams: need 1 <= n_min <= n_max");
  const std::string marked = "<" + token + ">";
  const int len = static_cast<int>(marked.size());
  std::vector<std::string> grams;
  for (int n = n_min; n <= n_max; ++n) {
    // The full marked token is emitted once, at the end.
    for (int i = 0; i + n <= len; ++i) {
      if (n == len) continue;
      grams.push_back(marked.substr(static_cast<std::size_t>(i), static_cast<std::size_t>(n)));
    }
  }
  grams.push_back(marked);
  return grams;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -log σ(x), computed without overflow for large |x|.
double neg_log_sigmoid(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

}  // namespace

SkipGram::SkipGram(std::vector<std::vector<int>> features, int input_rows, std::vector<std::uint64_t> counts, int dim,
                   std::uint64_t seed)
    : features_(std::move(features)) {
  if (dim < 1) throw ConfigError("skip-gram: dim must be >= 1");
  if (features_.empty()) throw DataError("skip-gram: empty vocabulary");
  if (counts.size() != features_.size()) throw ShapeError("skip-gram: counts do not match vocabulary");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.5 / dim, 0.5 / dim);
  input_.resize(input_rows, dim);
  for (Eigen::Index i = 0; i < input_.size(); ++i) input_.data()[i] = init(rng);
  output_ = nn::Mat<double>::Zero(static_cast<Eigen::Index>(features_.size()), dim);
  cumulative_.resize(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += std::pow(static_cast<double>(counts[i]), 0.75);
    cumulative_[i] = total;
  }
  for (auto& c : cumulative_) c /= total;
}

int SkipGram::sample_negative(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), unit(rng));
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative_.begin(), static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
}

Eigen::RowVectorXd SkipGram::word_vector(int w) const {
  const auto& feats = features_[static_cast<std::size_t>(w)];
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(input_.cols());
  for (int f : feats) h += input_.row(f);
  return h / static_cast<double>(feats.size());
}

double SkipGram::pair_loss(int center, int target, const std::vector<int>& negatives, nn::Mat<double>* d_input,
                           nn::Mat<double>* d_output) const {
  const Eigen::RowVectorXd h = word_vector(center);
  Eigen::RowVectorXd dh = Eigen::RowVectorXd::Zero(h.size());
  double loss = 0.0;
  auto term = [&](int word, double label) {
    const double x = h.dot(output_.row(word));
    loss += label > 0 ? neg_log_sigmoid(x) : neg_log_sigmoid(-x);
    const double g = sigmoid(x) - label;  // dL/dx
    dh += g * output_.row(word);
    if (d_output != nullptr) d_output->row(word) += g * h;
  };
  term(target, 1.0);
  for (int n : negatives) term(n, 0.0);
  if (d_input != nullptr) {
    const auto& feats = features_[static_cast<std::size_t>(center)];
    for (int f : feats) d_input->row(f) += dh / static_cast<double>(feats.size());
  }
  return loss;
}

double SkipGram::train_epoch(const std::vector<std::vector<int>>& corpus, const SkipGramConfig& cfg, double lr_begin,
                             double lr_end, std::mt19937_64& rng) {
  if (cfg.window < 1) throw ConfigError("skip-gram: window must be >= 1");
  if (cfg.negatives < 0) throw ConfigError("skip-gram: negatives must be >= 0");
  std::size_t total_positions = 0;
  for (const auto& s : corpus) total_positions += s.size();
  std::size_t seen = 0;
  double loss = 0.0;
  std::size_t pairs = 0;
  Eigen::RowVectorXd dh(input_.cols());
  for (const auto& sentence : corpus) {
    const int len = static_cast<int>(sentence.size());
    for (int i = 0; i < len; ++i, ++seen) {
      const double progress = total_positions == 0 ? 0.0 : static_cast<double>(seen) / total_positions;
      const double lr = lr_begin + (lr_end - lr_begin) * progress;
      const int center = sentence[static_cast<std::size_t>(i)];
      const Eigen::RowVectorXd h = word_vector(center);
      dh.setZero();
      auto update = [&](int word, double label) {
        const double x = h.dot(output_.row(word));
        loss += label > 0 ? neg_log_sigmoid(x) : neg_log_sigmoid(-x);
        const double g = lr * (label - sigmoid(x));
        dh += g * output_.row(word);
        output_.row(word) += g * h;
      };
      for (int j = std::max(0, i - cfg.window); j <= std::min(len - 1, i + cfg.window); ++j) {
        if (j == i) continue;
        const int target = sentence[static_cast<std::size_t>(j)];
        update(target, 1.0);
        for (int k = 0; k < cfg.negatives; ++k) {
          const int neg = sample_negative(rng);
          if (neg != target) update(neg, 0.0);
        }
        ++pairs;
      }
      const auto& feats = features_[static_cast<std::size_t>(center)];
      for (int f : feats) input_.row(f) += dh / static_cast<double>(feats.size());
    }
  }
  return pairs == 0 ? 0.0 : loss / static_cast<double>(pairs);
}

namespace {

EmbeddingTable export_table(const SkipGram& model, std::vector<std::string> keys) {
  nn::Mat<float> m(static_cast<Eigen::Index>(keys.size()), model.word_vector(0).size());
  for (Eigen::Index w = 0; w < m.rows(); ++w) m.row(w) = model.word_vector(static_cast<int>(w)).cast<float>();
  return EmbeddingTable(std::move(keys), std::move(m));
}

std::vector<double> run_epochs(SkipGram& model, const std::vector<std::vector<int>>& corpus,
                               const SkipGramConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("skip-gram: epochs must be >= 1");
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> losses;
  const double lr_floor = cfg.lr * 1e-4;
  for (int e = 0; e < cfg.epochs; ++e) {
    const double begin = cfg.lr + (lr_floor - cfg.lr) * e / cfg.epochs;
    const double end = cfg.lr + (lr_floor - cfg.lr) * (e + 1) / cfg.epochs;
    losses.push_back(model.train_epoch(corpus, cfg, begin, end, rng));
  }
  return losses;
}

}  // namespace

EmbeddingTable train_token_embeddings(const std::vector<std::vector<std::string>>& corpus, int dim,
                                      const SkipGramConfig& cfg, std::vector<double>* epoch_losses) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : corpus) {
    for (const auto& t : s) ++counts[t];
  }
  if (counts.empty()) throw DataError("train_token_embeddings: empty corpus");
  if (cfg.window < 1) throw ConfigError("skip-gram: window must be >= 1");

  std::vector<std::pair<std::string, std::uint64_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> keys;
  std::vector<std::uint64_t> freq;
  std::unordered_map<std::string, int> word_id;
  for (const auto& [tok, c] : ordered) {
    word_id.emplace(tok, static_cast<int>(keys.size()));
    keys.push_back(tok);
    freq.push_back(c);
  }

  std::vector<std::vector<int>> features(keys.size());
  int rows = 0;
  if (cfg.subwords) {
    std::unordered_map<std::string, int> gram_id;
    for (std::size_t w = 0; w < keys.size(); ++w) {
      for (const auto& g : subword_ngrams(keys[w], cfg.n_min, cfg.n_max)) {
        auto [it, inserted] = gram_id.emplace(g, rows);
        if (inserted) ++rows;
        features[w].push_back(it->second);
      }
    }
  } else {
    for (std::size_t w = 0; w < keys.size(); ++w) features[w] = {rows++};
  }

  std::vector<std::vector<int>> ids;
  ids.reserve(corpus.size());
  for (const auto& s : corpus) {
    std::vector<int> row;
    row.reserve(s.size());
    for (const auto& t : s) row.push_back(word_id.at(t));
    ids.push_back(std::move(row));
  }

  SkipGram model(std::move(features), rows, std::move(freq), dim, cfg.seed);
  auto losses = run_epochs(model, ids, cfg);
  if (epoch_losses != nullptr) *epoch_losses = std::move(losses);
  return export_table(model, std::move(keys));
}

// ---------------------------------------------------------------------------
// DeepWalk

std::vector<std::vector<int>> walk_adjacency(const graph::Csrg& g) {
  std::vector<std::vector<int>> adj(g.nodes.size());
  for (const auto& e : g.edges) {
    adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
    adj[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

WalkSet random_walks(const std::vector<std::vector<int>>& adjacency, const WalkParams& params) {
  if (params.gamma < 1) throw ConfigError("random_walks: gamma must be >= 1");
  if (params.t < 1) throw ConfigError("random_walks: t must be >= 1");
  WalkSet out;
  out.params = params;
  if (adjacency.empty()) return out;
  std::mt19937_64 rng(params.seed);
  std::vector<int> order(adjacency.size());
  out.walks.reserve(adjacency.size() * static_cast<std::size_t>(params.gamma));
  for (int pass = 0; pass < params.gamma; ++pass) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int start : order) {
      std::vector<int> walk{start};
      while (static_cast<int>(walk.size()) < params.t) {
        const auto& nbrs = adjacency[static_cast<std::size_t>(walk.back())];
        if (nbrs.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
        walk.push_back(nbrs[pick(rng)]);
      }
      out.walks.push_back(std::move(walk));
    }
  }
  return out;
}

WalkSet random_walks(const graph::Csrg& g, int gamma, int t, std::uint64_t seed) {
  return random_walks(walk_adjacency(g), WalkParams{gamma, t, seed});
}

EmbeddingTable train_node_embeddings(const WalkSet& walks, const std::vector<std::string>& keys, int dim,
                                     const SkipGramConfig& cfg) {
  if (walks.walks.empty()) throw DataError("train_node_embeddings: no walks");
  if (cfg.window < 1) throw ConfigError("skip-gram: window must be >= 1");
  std::vector<std::uint64_t> counts(keys.size(), 0);
  for (const auto& w : walks.walks) {
    for (int v : w) {
      if (v < 0 || static_cast<std::size_t>(v) >= keys.size()) throw ShapeError("walk visits an unknown node id");
      ++counts[static_cast<std::size_t>(v)];
    }
  }
  // Unvisited nodes still need a row; give them the smallest sampling mass.
  for (auto& c : counts) c = std::max<std::uint64_t>(c, 1);
  std::vector<std::vector<int>> features(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) features[i] = {static_cast<int>(i)};
  SkipGram model(std::move(features), static_cast<int>(keys.size()), std::move(counts), dim, cfg.seed);
  run_epochs(model, walks.walks, cfg);
  return export_table(model, keys);
}

}  // namespace cssam::pretrain
