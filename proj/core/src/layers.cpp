#include "cssam/layers.hpp"

#include <cmath>
#include <limits>

#include "cssam/error.hpp"

namespace cssam::nn {

Mask all_real(std::size_t n) { return Mask(n, true); }

std::size_t real_count(const Mask& mask) {
  std::size_t n = 0;
  for (bool m : mask) n += m ? 1 : 0;
  return n;
}

ShapeList linear_shapes(const std::string& prefix, Eigen::Index in, Eigen::Index out) {
  return {{prefix + ".w", {in, out}}, {prefix + ".b", {1, out}}};
}

ShapeList lstm_shapes(const std::string& prefix, Eigen::Index in, Eigen::Index hidden) {
  return {{prefix + ".w_x", {in, 4 * hidden}},
          {prefix + ".w_h", {hidden, 4 * hidden}},
          {prefix + ".b", {1, 4 * hidden}}};
}

ShapeList gat_shapes(const std::string& prefix, Eigen::Index in, Eigen::Index out) {
  return {{prefix + ".w", {in, out}}, {prefix + ".a", {1, 2 * out}}};
}

ShapeList pool_shapes(const std::string& prefix, Eigen::Index dim) {
  return {{prefix + ".w", {dim, dim}}, {prefix + ".b", {1, dim}}, {prefix + ".v", {1, dim}}};
}

ShapeList cress_block_shapes(const std::string& prefix, Eigen::Index embed, Eigen::Index hidden,
                             bool identity_align) {
  const Eigen::Index in = embed + hidden;
  const Eigen::Index fused = embed + 2 * hidden;
  ShapeList out = linear_shapes(prefix + ".enc", 3 * in, hidden);
  if (!identity_align) {
    auto align = linear_shapes(prefix + ".align", fused, hidden);
    out.insert(out.end(), align.begin(), align.end());
  }
  auto cross = linear_shapes(prefix + ".cross", fused, fused);
  auto proj = linear_shapes(prefix + ".out", fused, hidden);
  out.insert(out.end(), cross.begin(), cross.end());
  out.insert(out.end(), proj.begin(), proj.end());
  return out;
}

namespace {

template <class T>
Mat<T> row_mask(const Mask& mask, Eigen::Index cols) {
  Mat<T> m(static_cast<Eigen::Index>(mask.size()), cols);
  for (std::size_t i = 0; i < mask.size(); ++i) m.row(static_cast<Eigen::Index>(i)).setConstant(mask[i] ? T(1) : T(0));
  return m;
}

// Zeroes pad rows; a no-op when every position is real.
template <class T>
Var mask_rows(Tape<T>& tape, Var x, const Mask& mask) {
  if (real_count(mask) == mask.size()) return x;
  return tape.mul_const(x, row_mask<T>(mask, tape.value(x).cols()));
}

// 0 for allowed columns, -inf for pad columns, repeated over `rows`.
template <class T>
Mat<T> column_bias(const Mask& cols, Eigen::Index rows) {
  Mat<T> m(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    m.col(static_cast<Eigen::Index>(j)).setConstant(cols[j] ? T(0) : -std::numeric_limits<T>::infinity());
  }
  return m;
}

void require_mask(const Mask& mask, Eigen::Index rows, const char* op) {
  if (static_cast<Eigen::Index>(mask.size()) != rows) {
    throw ShapeError(std::string(op) + ": mask length " + std::to_string(mask.size()) + " for " +
                     std::to_string(rows) + " rows");
  }
}

}  // namespace

template <class T>
Var linear(Tape<T>& tape, Var x, const std::string& prefix) {
  return tape.add_row(tape.matmul(x, tape.param(prefix + ".w")), tape.param(prefix + ".b"));
}

template <class T>
Var lstm_encode(Tape<T>& tape, Var x, const Mask& mask, const std::string& prefix) {
  const Var w_x = tape.param(prefix + ".w_x");
  const Var w_h = tape.param(prefix + ".w_h");
  const Eigen::Index hidden = tape.value(w_h).rows();
  if (tape.value(x).cols() != tape.value(w_x).rows()) {
    throw ShapeError("lstm_encode: input dim " + std::to_string(tape.value(x).cols()) + ", expected " +
                     std::to_string(tape.value(w_x).rows()));
  }
  const Eigen::Index len = tape.value(x).rows();
  require_mask(mask, len, "lstm_encode");
  if (len == 0) throw ShapeError("lstm_encode: empty sequence");

  const Var xw = tape.add_row(tape.matmul(x, w_x), tape.param(prefix + ".b"));
  Var h = tape.constant(Mat<T>::Zero(1, hidden));
  Var c = h;
  std::vector<Var> outputs;
  outputs.reserve(static_cast<std::size_t>(len));
  for (Eigen::Index t = 0; t < len; ++t) {
    if (mask[static_cast<std::size_t>(t)]) {
      const Var z = tape.add(tape.slice_rows(xw, t, 1), tape.matmul(h, w_h));
      const Var in = tape.sigmoid(tape.slice_cols(z, 0, hidden));
      const Var forget = tape.sigmoid(tape.slice_cols(z, hidden, hidden));
      const Var cell = tape.tanh(tape.slice_cols(z, 2 * hidden, hidden));
      const Var out = tape.sigmoid(tape.slice_cols(z, 3 * hidden, hidden));
      c = tape.add(tape.hadamard(forget, c), tape.hadamard(in, cell));
      h = tape.hadamard(out, tape.tanh(c));
    }
    outputs.push_back(h);
  }
  return tape.concat_rows(outputs);
}

template <class T>
Mat<T> gat_log_weights(const GatGraph& graph) {
  if (graph.nodes < 1) throw ShapeError("gat: graph has no nodes");
  if (!(graph.self_loop_weight > 0.0)) throw ConfigError("gat: self-loop weight must be positive");
  Mat<T> w = Mat<T>::Zero(graph.nodes, graph.nodes);
  for (const auto& e : graph.edges) {
    if (e.src < 0 || e.src >= graph.nodes || e.dst < 0 || e.dst >= graph.nodes) {
      throw ShapeError("gat: edge endpoint out of range");
    }
    if (!(e.weight > 0.0)) throw ConfigError("gat: edge weights must be positive");
    w(e.dst, e.src) += static_cast<T>(e.weight);
  }
  for (int i = 0; i < graph.nodes; ++i) w(i, i) += static_cast<T>(graph.self_loop_weight);
  return w.unaryExpr([](T v) { return v > T(0) ? std::log(v) : -std::numeric_limits<T>::infinity(); });
}

template <class T>
Var gat_layer(Tape<T>& tape, Var h, const Mat<T>& log_weights, const std::string& prefix, T leaky_slope) {
  const Eigen::Index n = tape.value(h).rows();
  if (log_weights.rows() != n || log_weights.cols() != n) throw ShapeError("gat_layer: adjacency size");
  const Var wh = tape.matmul(h, tape.param(prefix + ".w"));
  const Eigen::Index out = tape.value(wh).cols();
  const Var a = tape.param(prefix + ".a");
  if (tape.value(a).cols() != 2 * out) throw ShapeError("gat_layer: attention vector size");
  const Var recv = tape.matmul(wh, tape.transpose(tape.slice_cols(a, 0, out)));
  const Var send = tape.transpose(tape.matmul(wh, tape.transpose(tape.slice_cols(a, out, out))));
  const Var e = tape.leaky_relu(tape.broadcast_add(recv, send), leaky_slope);
  const Var alpha = tape.row_softmax(tape.add_const(e, log_weights));
  return tape.elu(tape.matmul(alpha, wh));
}

template <class T>
Aligned cross_align(Tape<T>& tape, Var a, Var b, const Mask& mask_a, const Mask& mask_b,
                    const std::string& prefix, bool identity) {
  const Eigen::Index la = tape.value(a).rows();
  const Eigen::Index lb = tape.value(b).rows();
  require_mask(mask_a, la, "cross_align");
  require_mask(mask_b, lb, "cross_align");
  if (real_count(mask_a) == 0 || real_count(mask_b) == 0) {
    throw ShapeError("cross_align: alignment against an all-pad sequence is undefined");
  }
  if (tape.value(a).cols() != tape.value(b).cols()) throw ShapeError("cross_align: feature dims differ");
  const Var fa = identity ? a : tape.relu(linear(tape, a, prefix));
  const Var fb = identity ? b : tape.relu(linear(tape, b, prefix));
  const Var e = tape.matmul(fa, tape.transpose(fb));
  const Var attn_a = tape.row_softmax(tape.add_const(e, column_bias<T>(mask_b, la)));
  const Var attn_b = tape.row_softmax(tape.add_const(tape.transpose(e), column_bias<T>(mask_a, lb)));
  return {tape.matmul(attn_a, b), tape.matmul(attn_b, a)};
}

template <class T>
Var window_encode(Tape<T>& tape, Var x, const std::string& prefix) {
  const Var window = tape.concat_cols({tape.shift_rows(x, 1), x, tape.shift_rows(x, -1)});
  return tape.relu(linear(tape, window, prefix));
}

template <class T>
Var dropout(Tape<T>& tape, Var x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be below 1");
  const auto& v = tape.value(x);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat<T> keep(v.rows(), v.cols());
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = unit(rng) < p ? T(0) : scale;
  return tape.mul_const(x, keep);
}

namespace {

template <class T>
Var block_input(Tape<T>& tape, Var x1, const CressHistory& hist, Eigen::Index hidden) {
  Var residual;
  if (hist.prev1.valid() && hist.prev2.valid()) {
    residual = tape.add(hist.prev1, hist.prev2);
  } else if (hist.prev1.valid()) {
    residual = hist.prev1;
  } else {
    residual = tape.constant(Mat<T>::Zero(tape.value(x1).rows(), hidden));
  }
  return tape.concat_cols({x1, residual});
}

}  // namespace

template <class T>
Aligned cress_block(Tape<T>& tape, Var x1_a, Var x1_b, const CressHistory& hist_a,
                    const CressHistory& hist_b, const Mask& mask_a, const Mask& mask_b,
                    const std::string& prefix, const CressOptions& options, std::mt19937_64* dropout_rng) {
  const Eigen::Index hidden = tape.value(tape.param(prefix + ".out.w")).cols();
  require_mask(mask_a, tape.value(x1_a).rows(), "cress_block");
  require_mask(mask_b, tape.value(x1_b).rows(), "cress_block");

  auto features = [&](Var x1, const CressHistory& hist, const Mask& mask) {
    Var in = mask_rows(tape, block_input(tape, x1, hist, hidden), mask);
    if (dropout_rng != nullptr) in = dropout(tape, in, options.dropout, *dropout_rng);
    const Var enc = mask_rows(tape, window_encode(tape, in, prefix + ".enc"), mask);
    return tape.concat_cols({in, enc});
  };
  const Var c_a = features(x1_a, hist_a, mask_a);
  const Var c_b = features(x1_b, hist_b, mask_b);
  const Aligned aligned = cross_align(tape, c_a, c_b, mask_a, mask_b, prefix + ".align", options.identity_align);

  // Cross network step x1 = x0 ⊙ (W xl + b) + xl with x0 = c, xl = c + a'.
  auto fuse = [&](Var c, Var a, const Mask& mask) {
    const Var xl = tape.add(c, a);
    const Var crossed = tape.add(tape.hadamard(c, linear(tape, xl, prefix + ".cross")), xl);
    return mask_rows(tape, linear(tape, crossed, prefix + ".out"), mask);
  };
  return {fuse(c_a, aligned.a, mask_a), fuse(c_b, aligned.b, mask_b)};
}

template <class T>
Aligned cress_stack(Tape<T>& tape, Var x_a, Var x_b, const Mask& mask_a, const Mask& mask_b,
                    const std::string& prefix, int blocks, const CressOptions& options,
                    std::mt19937_64* dropout_rng) {
  if (blocks < 1) throw ConfigError("cress: need at least one block");
  CressHistory ha, hb;
  Aligned out{};
  for (int n = 1; n <= blocks; ++n) {
    out = cress_block(tape, x_a, x_b, ha, hb, mask_a, mask_b, prefix + ".block" + std::to_string(n), options,
                      dropout_rng);
    ha = {out.a, ha.prev1};
    hb = {out.b, hb.prev1};
  }
  return out;
}

template <class T>
Var attention_pool(Tape<T>& tape, Var h, const Mask& mask, const std::string& prefix) {
  const Eigen::Index len = tape.value(h).rows();
  require_mask(mask, len, "attention_pool");
  if (real_count(mask) == 0) throw ShapeError("attention_pool: every position is padding");
  const Var hidden = tape.tanh(linear(tape, h, prefix));
  const Var scores = tape.transpose(tape.matmul(hidden, tape.transpose(tape.param(prefix + ".v"))));
  const Var alpha = tape.row_softmax(tape.add_const(scores, column_bias<T>(mask, 1)));
  return tape.matmul(alpha, h);
}

template <class T>
Var max_pool(Tape<T>& tape, Var h, const Mask& mask) {
  require_mask(mask, tape.value(h).rows(), "max_pool");
  if (real_count(mask) == 0) throw ShapeError("max_pool: every position is padding");
  return tape.max_rows(h, mask);
}

#define CSSAM_INSTANTIATE_LAYERS(T)                                                                     \
  template Var linear<T>(Tape<T>&, Var, const std::string&);                                            \
  template Var lstm_encode<T>(Tape<T>&, Var, const Mask&, const std::string&);                          \
  template Mat<T> gat_log_weights<T>(const GatGraph&);                                                  \
  template Var gat_layer<T>(Tape<T>&, Var, const Mat<T>&, const std::string&, T);                       \
  template Aligned cross_align<T>(Tape<T>&, Var, Var, const Mask&, const Mask&, const std::string&,     \
                                  bool);                                                                \
  template Var window_encode<T>(Tape<T>&, Var, const std::string&);                                     \
  template Var dropout<T>(Tape<T>&, Var, double, std::mt19937_64&);                                     \
  template Aligned cress_block<T>(Tape<T>&, Var, Var, const CressHistory&, const CressHistory&,         \
                                  const Mask&, const Mask&, const std::string&, const CressOptions&,    \
                                  std::mt19937_64*);                                                    \
  template Aligned cress_stack<T>(Tape<T>&, Var, Var, const Mask&, const Mask&, const std::string&, int, \
                                  const CressOptions&, std::mt19937_64*);                               \
  template Var attention_pool<T>(Tape<T>&, Var, const Mask&, const std::string&);                       \
  template Var max_pool<T>(Tape<T>&, Var, const Mask&);

CSSAM_INSTANTIATE_LAYERS(float)
CSSAM_INSTANTIATE_LAYERS(double)

#undef CSSAM_INSTANTIATE_LAYERS

}  // namespace cssam::nn
