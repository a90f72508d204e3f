#include <cmath>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cssam/error.hpp"
#include "cssam/grad_check.hpp"
#include "cssam/tensor.hpp"

namespace cssam::nn {
namespace {

Mat<double> mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
  Mat<double> m(r, c);
  auto it = v.begin();
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = *it++;
  return m;
}

TEST(TapeTest, MatmulValueAndGradient) {
  ParamStore<double> store;
  store.tensors["w"] = mat(2, 1, {3, 4});
  Tape<double> tape(&store);
  const Var x = tape.constant(mat(1, 2, {1, 2}));
  const Var y = tape.matmul(x, tape.param("w"));
  EXPECT_DOUBLE_EQ(tape.value(y)(0, 0), 11.0);
  tape.backward(y);
  Gradients<double> g;
  tape.accumulate(g);
  EXPECT_TRUE(g.at("w").isApprox(mat(2, 1, {1, 2})));
}

TEST(TapeTest, FrozenParamsGetNoGradient) {
  ParamStore<double> store;
  store.tensors["w"] = mat(1, 1, {2});
  store.frozen.insert("w");
  Tape<double> tape(&store);
  const Var y = tape.scale(tape.param("w"), 3.0);
  tape.backward(y);
  Gradients<double> g;
  tape.accumulate(g);
  EXPECT_TRUE(g.empty());
}

TEST(TapeTest, ShiftRows) {
  Tape<double> tape;
  const Var x = tape.constant(mat(3, 1, {1, 2, 3}));
  EXPECT_TRUE(tape.value(tape.shift_rows(x, 1)).isApprox(mat(3, 1, {0, 1, 2})));
  EXPECT_TRUE(tape.value(tape.shift_rows(x, -1)).isApprox(mat(3, 1, {2, 3, 0})));
}

TEST(TapeTest, SoftmaxIgnoresNegativeInfinity) {
  Tape<double> tape;
  const double inf = std::numeric_limits<double>::infinity();
  const Var s = tape.row_softmax(tape.constant(mat(1, 3, {0, -inf, 0})));
  EXPECT_TRUE(tape.value(s).isApprox(mat(1, 3, {0.5, 0, 0.5})));
}

TEST(TapeTest, CosineOfZeroVectorThrows) {
  Tape<double> tape;
  const Var a = tape.constant(mat(1, 2, {0, 0}));
  const Var b = tape.constant(mat(1, 2, {1, 0}));
  EXPECT_THROW(tape.cosine(a, b), InvariantError);
}

TEST(TapeTest, CosineValue) {
  Tape<double> tape;
  const Var c = tape.cosine(tape.constant(mat(1, 2, {1, 0})), tape.constant(mat(1, 2, {1, 1})));
  EXPECT_NEAR(tape.value(c)(0, 0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(TapeTest, ShapeMismatchThrows) {
  Tape<double> tape;
  EXPECT_THROW(tape.matmul(tape.constant(Mat<double>::Ones(2, 3)), tape.constant(Mat<double>::Ones(2, 3))),
               ShapeError);
  EXPECT_THROW(tape.add(tape.constant(Mat<double>::Ones(2, 3)), tape.constant(Mat<double>::Ones(3, 2))), ShapeError);
}

TEST(TapeTest, MaxRowsRespectsMask) {
  Tape<double> tape;
  const Var m = tape.max_rows(tape.constant(mat(3, 2, {1, 5, 9, 0, 2, 3})), {true, false, true});
  EXPECT_TRUE(tape.value(m).isApprox(mat(1, 2, {2, 5})));
}

TEST(TapeTest, GatherMeanRows) {
  ParamStore<double> store;
  store.tensors["t"] = mat(3, 2, {1, 2, 3, 4, 5, 6});
  Tape<double> tape(&store);
  const Var v = tape.gather_mean_rows("t", {{0, 2}, {}});
  EXPECT_TRUE(tape.value(v).isApprox(mat(2, 2, {3, 4, 0, 0})));
  tape.backward(tape.sum(v));
  Gradients<double> g;
  tape.accumulate(g);
  EXPECT_TRUE(g.at("t").isApprox(mat(3, 2, {0.5, 0.5, 0, 0, 0.5, 0.5})));
}

// Every differentiable op in one expression, checked against finite
// differences.
TEST(TapeTest, CompositeGradCheck) {
  ParamStore<double> store;
  store.tensors["a"] = mat(3, 2, {0.3, -0.7, 1.1, 0.2, -0.4, 0.9});
  store.tensors["b"] = mat(2, 2, {0.5, -0.3, 0.8, 0.1});
  store.tensors["r"] = mat(1, 2, {0.2, -0.1});
  store.tensors["e"] = mat(4, 2, {0.1, 0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8});
  const auto forward = [](Tape<double>& t) {
    const Var a = t.param("a");
    const Var h = t.tanh(t.add_row(t.matmul(a, t.param("b")), t.param("r")));
    const Var s = t.row_softmax(t.hadamard(h, t.sigmoid(a)));
    const Var g = t.concat_rows({t.gather_rows("e", {1, 3}), t.slice_rows(s, 0, 1)});
    const Var z = t.concat_cols({t.elu(t.sub(g, t.scale(t.shift_rows(g, 1), 0.5))), t.transpose(t.transpose(t.slice_cols(s, 1, 1)))});
    const Var c = t.cosine(t.slice_rows(t.leaky_relu(z, 0.2), 0, 1), t.slice_rows(z, 2, 1));
    return t.add(c, t.sum(t.relu(t.broadcast_add(t.slice_cols(a, 0, 1), t.param("r")))));
  };
  const GradCheckResult r = grad_check(forward, store);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  EXPECT_GT(r.checked, 10u);
}

}  // namespace
}  // namespace cssam::nn
