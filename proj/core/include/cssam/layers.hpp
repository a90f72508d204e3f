#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cssam/tensor.hpp"

namespace cssam::nn {

// Real/pad flags, one per sequence position (true = real).
using Mask = std::vector<bool>;

Mask all_real(std::size_t n);
std::size_t real_count(const Mask& mask);

// Parameter shapes for every layer, keyed by the same prefixes the layer
// functions take. Used by model initialization and by the gradient checks.
struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};
using ShapeList = std::vector<std::pair<std::string, Shape>>;

ShapeList linear_shapes(const std::string& prefix, Eigen::Index in, Eigen::Index out);
ShapeList lstm_shapes(const std::string& prefix, Eigen::Index in, Eigen::Index hidden);
ShapeList gat_shapes(const std::string& prefix, Eigen::Index in, Eigen::Index out);
ShapeList pool_shapes(const std::string& prefix, Eigen::Index dim);
ShapeList cress_block_shapes(const std::string& prefix, Eigen::Index embed, Eigen::Index hidden,
                             bool identity_align);

// x·W + b with W = prefix.w, b = prefix.b.
template <class T>
Var linear(Tape<T>& tape, Var x, const std::string& prefix);

// LSTM over the rows of x. Gate order in the packed weights is input,
// forget, cell, output. Pad steps carry the previous state forward; the
// state starts at zero, so an all-pad sequence yields zeros.
template <class T>
Var lstm_encode(Tape<T>& tape, Var x, const Mask& mask, const std::string& prefix);

// Directed weighted edge for message passing: features flow src -> dst.
struct WeightedEdge {
  int src = 0;
  int dst = 0;
  double weight = 1.0;
};

struct GatGraph {
  int nodes = 0;
  std::vector<WeightedEdge> edges;
  double self_loop_weight = 1.0;
};

// Additive attention bias log(w_ij) for receiver i and sender j, -inf where
// j is not in N_i = in-neighbours of i plus i itself. Parallel edges sum.
template <class T>
Mat<T> gat_log_weights(const GatGraph& graph);

// Single-head graph attention layer with ELU output:
//   e_ij = LeakyReLU(a · [W h_i ; W h_j]),  α_i· = softmax_j(e_ij + log w_ij)
template <class T>
Var gat_layer(Tape<T>& tape, Var h, const Mat<T>& log_weights, const std::string& prefix,
              T leaky_slope = T(0.2));

struct Aligned {
  Var a;
  Var b;
};

// Soft alignment between two sequences through the shared projection F
// (ReLU feed-forward at prefix, or identity). Pad positions of the opposing
// sequence are excluded from each softmax.
template <class T>
Aligned cross_align(Tape<T>& tape, Var a, Var b, const Mask& mask_a, const Mask& mask_b,
                    const std::string& prefix, bool identity);

// Window-3 position-wise encoder: ReLU([x_{i-1}; x_i; x_{i+1}] W + b).
template <class T>
Var window_encode(Tape<T>& tape, Var x, const std::string& prefix);

struct CressOptions {
  bool identity_align = false;
  double dropout = 0.0;  // applied to block inputs when an rng is supplied
};

// Previous outputs o^(n-1) and o^(n-2) for one side; invalid handles stand
// for zero.
struct CressHistory {
  Var prev1;
  Var prev2;
};

// One CRESS block for both sequences with shared parameters at prefix.
// x1 is the original embedding sequence of a side.
template <class T>
Aligned cress_block(Tape<T>& tape, Var x1_a, Var x1_b, const CressHistory& hist_a,
                    const CressHistory& hist_b, const Mask& mask_a, const Mask& mask_b,
                    const std::string& prefix, const CressOptions& options,
                    std::mt19937_64* dropout_rng = nullptr);

// Stack of `blocks` CRESS blocks named prefix.block1..N; returns o^(N).
template <class T>
Aligned cress_stack(Tape<T>& tape, Var x_a, Var x_b, const Mask& mask_a, const Mask& mask_b,
                    const std::string& prefix, int blocks, const CressOptions& options,
                    std::mt19937_64* dropout_rng = nullptr);

// v = Σ α_i h_i with α = softmax over real positions of v_s · tanh(W h_i + b).
template <class T>
Var attention_pool(Tape<T>& tape, Var h, const Mask& mask, const std::string& prefix);

// Column-wise max over real positions.
template <class T>
Var max_pool(Tape<T>& tape, Var h, const Mask& mask);

// Inverted dropout; identity when p == 0.
template <class T>
Var dropout(Tape<T>& tape, Var x, double p, std::mt19937_64& rng);

}  // namespace cssam::nn
