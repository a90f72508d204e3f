#include "cssam/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cssam/error.hpp"
#include "cssam/parallel.hpp"

namespace cssam::train {

namespace {

// Gradient chunks per batch; fixed so the reduction order never depends on
// the worker count.
constexpr std::size_t kMaxChunks = 8;

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)};
  return std::mt19937_64(seq);
}

}  // namespace

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size}, {"epochs", cfg.epochs},       {"lr", cfg.lr},
          {"beta", cfg.beta},             {"clip_norm", cfg.clip_norm}, {"seed", cfg.seed},
          {"patience", cfg.patience}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig cfg;
  const nlohmann::json defaults = to_json(cfg);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown train config key: " + key);
  }
  try {
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("beta")) cfg.beta = j.at("beta").get<double>();
    if (j.contains("clip_norm")) cfg.clip_norm = j.at("clip_norm").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("patience")) cfg.patience = j.at("patience").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train config value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.lr < 0.0) throw ConfigError("lr must be >= 0");
  if (cfg.beta < 0.0) throw ConfigError("beta must be >= 0");
  if (cfg.clip_norm <= 0.0) throw ConfigError("clip_norm must be positive");
  if (cfg.patience < 0) throw ConfigError("patience must be >= 0");
}

std::vector<Triplet> sample_triplets(const std::vector<std::string>& ids, std::mt19937_64& rng) {
  if (ids.size() < 2) throw DataError("sample_triplets: a batch needs at least two records");
  std::vector<Triplet> out;
  out.reserve(ids.size());
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (ids[j] != ids[i]) candidates.push_back(j);
    }
    if (candidates.empty()) throw DataError("sample_triplets: no negative available for record " + ids[i]);
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    out.push_back(Triplet{i, candidates[pick(rng)]});
  }
  return out;
}

std::vector<Triplet> sample_triplets(const std::vector<corpus::CodeDocPair>& batch, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(batch.size());
  for (const auto& p : batch) ids.push_back(p.id);
  std::mt19937_64 rng(seed);
  return sample_triplets(ids, rng);
}

void adam_step(nn::ParamStore<float>& params, const nn::Gradients<float>& grads, AdamState& state, double lr) {
  for (const auto& [name, g] : grads) {
    if (!g.allFinite()) throw InvariantError("non-finite gradient in tensor " + name);
    if (!params.contains(name)) throw InvariantError("gradient for unknown tensor " + name);
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<float>(state.beta1);
  const auto b2 = static_cast<float>(state.beta2);
  const auto step_size = static_cast<float>(lr / bc1);
  const auto v_scale = static_cast<float>(1.0 / std::sqrt(bc2));
  const auto eps = static_cast<float>(state.eps);
  for (auto& [name, p] : params.tensors) {
    if (!params.trainable(name)) continue;
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() == 0) {
      m = nn::Mat<float>::Zero(p.rows(), p.cols());
      v = nn::Mat<float>::Zero(p.rows(), p.cols());
    }
    const auto it = grads.find(name);
    if (it == grads.end()) {
      m *= b1;
      v *= b2;
    } else {
      m = b1 * m + (1.0f - b1) * it->second;
      v = b2 * v + (1.0f - b2) * it->second.cwiseAbs2();
    }
    p.array() -= step_size * m.array() / (v.array().sqrt() * v_scale + eps);
  }
}

double clip_global_norm(nn::Gradients<float>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) sq += g.cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const auto s = static_cast<float>(max_norm / norm);
    for (auto& [name, g] : grads) g *= s;
  }
  return norm;
}

nlohmann::json to_json(const EpochMetrics& m) {
  nlohmann::json j = {{"epoch", m.epoch},
                      {"mean_loss", m.mean_loss},
                      {"active_fraction", m.active_fraction},
                      {"wall_seconds", m.wall_seconds}};
  if (m.validation_mrr) j["validation_mrr"] = *m.validation_mrr;
  return j;
}

Trainer::Trainer(model::ModelConfig model_cfg, TrainConfig cfg, nn::ParamStore<float>& params, AdamState& state)
    : model_cfg_(std::move(model_cfg)), cfg_(cfg), params_(params), state_(state) {
  validate(cfg_);
  model::validate(model_cfg_);
}

EpochMetrics Trainer::train_epoch(const std::vector<dataset::Example>& data, int epoch, int threads) {
  if (data.size() < 2) throw DataError("train_epoch: need at least two examples");
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = derived_rng(cfg_.seed, static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);

  const auto batch_size = static_cast<std::size_t>(cfg_.batch_size);
  double loss_sum = 0.0;
  std::size_t active = 0;
  std::size_t count = 0;
  std::size_t batch_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    if (end - begin < 2) break;  // a lone trailing record has no in-batch negative
    std::vector<std::string> ids;
    for (std::size_t i = begin; i < end; ++i) ids.push_back(data[order[i]].id);
    const std::vector<Triplet> triplets = sample_triplets(ids, rng);

    const std::size_t chunks = std::min(kMaxChunks, triplets.size());
    std::vector<nn::Gradients<float>> chunk_grads(chunks);
    std::vector<double> chunk_loss(chunks, 0.0);
    std::vector<std::size_t> chunk_active(chunks, 0);
    parallel_for(chunks, threads, [&](std::size_t c) {
      for (std::size_t t = c; t < triplets.size(); t += chunks) {
        const auto& anchor = data[order[begin + triplets[t].anchor]];
        const auto& negative = data[order[begin + triplets[t].negative]];
        auto dropout_rng = derived_rng(cfg_.seed, static_cast<std::uint64_t>(epoch), batch_index, t + 1);
        nn::Tape<float> tape(&params_);
        const nn::Var loss = model::triplet_loss(tape, model_cfg_, anchor, anchor.query_ids, negative.query_ids,
                                                 cfg_.beta, &dropout_rng);
        const double value = tape.value(loss)(0, 0);
        chunk_loss[c] += value;
        if (value > 0.0) {
          ++chunk_active[c];
          tape.backward(loss);
          tape.accumulate(chunk_grads[c]);
        }
      }
    });
    nn::Gradients<float> grads;
    for (std::size_t c = 0; c < chunks; ++c) {
      nn::add_into(grads, chunk_grads[c]);
      loss_sum += chunk_loss[c];
      active += chunk_active[c];
    }
    count += triplets.size();
    for (const auto& [name, g] : grads) {
      if (!g.allFinite()) throw InvariantError("non-finite gradient in tensor " + name);
    }
    clip_global_norm(grads, cfg_.clip_norm);
    adam_step(params_, grads, state_, cfg_.lr);
  }

  EpochMetrics m;
  m.epoch = epoch;
  m.mean_loss = count == 0 ? 0.0 : loss_sum / static_cast<double>(count);
  m.active_fraction = count == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(count);
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

double Trainer::batch_loss(const std::vector<dataset::Example>& data, const std::vector<Triplet>& triplets) const {
  double total = 0.0;
  for (const auto& t : triplets) {
    nn::Tape<float> tape(&params_, false);
    const auto& anchor = data.at(t.anchor);
    const nn::Var loss =
        model::triplet_loss(tape, model_cfg_, anchor, anchor.query_ids, data.at(t.negative).query_ids, cfg_.beta);
    total += tape.value(loss)(0, 0);
  }
  return total;
}

void check_finite(const nn::ParamStore<float>& params) {
  for (const auto& [name, p] : params.tensors) {
    if (!p.allFinite()) throw InvariantError("parameter " + name + " became non-finite");
  }
}

std::vector<EpochMetrics> fit(const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                              const std::vector<dataset::Example>& data, nn::ParamStore<float>& params,
                              AdamState& state, int first_epoch, int threads, const EpochCallback& on_epoch,
                              const Validator& validate_fn) {
  if (data.empty()) throw DataError("fit: empty dataset");
  Trainer trainer(model_cfg, cfg, params, state);
  std::vector<EpochMetrics> history;
  std::optional<double> best;
  nn::ParamStore<float> best_params;
  AdamState best_state;
  int stale = 0;
  for (int epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
    EpochMetrics m = trainer.train_epoch(data, epoch, threads);
    check_finite(params);
    if (validate_fn) m.validation_mrr = validate_fn();
    history.push_back(m);
    if (on_epoch) on_epoch(m);
    if (cfg.patience > 0 && m.validation_mrr) {
      if (!best || *m.validation_mrr > *best) {
        best = m.validation_mrr;
        best_params = params;
        best_state = state;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        params = std::move(best_params);
        state = std::move(best_state);
        return history;
      }
    }
  }
  // Ran out of epochs after the best one: keep the best as well.
  if (best && stale > 0) {
    params = std::move(best_params);
    state = std::move(best_state);
  }
  return history;
}

}  // namespace cssam::train
