#include "cssam/tensor.hpp"

#include <cmath>
#include <limits>

#include "cssam/error.hpp"

namespace cssam::nn {

namespace {

std::string shape_of(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <class M>
void require_same(const M& a, const M& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_of(a.rows(), a.cols()) + " and " +
                     shape_of(b.rows(), b.cols()) + " differ");
  }
}

}  // namespace

template <class T>
const Mat<T>& ParamStore<T>::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

template <class T>
Mat<T>& ParamStore<T>::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

template <class T>
std::size_t ParamStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : tensors) n += static_cast<std::size_t>(m.size());
  return n;
}

template <class T>
void add_into(Gradients<T>& dst, const Gradients<T>& src) {
  for (const auto& [name, g] : src) {
    auto it = dst.find(name);
    if (it == dst.end()) {
      dst.emplace(name, g);
    } else {
      it->second += g;
    }
  }
}

template <class T>
std::size_t Tape<T>::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw InvariantError("tape: invalid variable handle");
  }
  return static_cast<std::size_t>(v.id);
}

template <class T>
Var Tape<T>::push(Matrix value, bool requires_grad, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <class T>
Mat<T>& Tape<T>::grad_ref(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <class T>
const Mat<T>& Tape<T>::table(const std::string& name) const {
  if (store_ == nullptr) throw InvariantError("tape has no parameter store");
  return store_->at(name);
}

template <class T>
Var Tape<T>::constant(Matrix value) {
  return push(std::move(value), false);
}

template <class T>
Var Tape<T>::param(const std::string& name) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return Var{it->second};
  const Matrix& m = table(name);
  Var v = push(m, trainable(name), [] {});
  param_ids_.emplace(name, v.id);
  return v;
}

template <class T>
Var Tape<T>::gather_rows(const std::string& name, const std::vector<int>& ids) {
  const Matrix& t = table(name);
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " outside table " + name);
    }
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), trainable(name), [this, id, name, ids] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    auto& rows = table_grads_[name];
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto [it, inserted] = rows.try_emplace(ids[i], g.row(static_cast<Eigen::Index>(i)));
      if (!inserted) it->second += g.row(static_cast<Eigen::Index>(i));
    }
  });
}

template <class T>
Var Tape<T>::gather_mean_rows(const std::string& name, const std::vector<std::vector<int>>& groups) {
  const Matrix& t = table(name);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(groups.size()), t.cols());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (int r : groups[i]) {
      if (r < 0 || r >= t.rows()) {
        throw ShapeError("gather_mean_rows: id " + std::to_string(r) + " outside table " + name);
      }
      out.row(static_cast<Eigen::Index>(i)) += t.row(r);
    }
    if (!groups[i].empty()) out.row(static_cast<Eigen::Index>(i)) /= static_cast<T>(groups[i].size());
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), trainable(name), [this, id, name, groups] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    auto& rows = table_grads_[name];
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].empty()) continue;
      const T w = T(1) / static_cast<T>(groups[i].size());
      for (int r : groups[i]) {
        auto [it, inserted] = rows.try_emplace(r, g.row(static_cast<Eigen::Index>(i)) * w);
        if (!inserted) it->second += g.row(static_cast<Eigen::Index>(i)) * w;
      }
    }
  });
}

template <class T>
Var Tape<T>::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + shape_of(av.rows(), av.cols()) + " by " + shape_of(bv.rows(), bv.cols()));
  }
  const int id = static_cast<int>(nodes_.size());
  return push(av * bv, rg(a) || rg(b), [this, id, a, b] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (rg(a)) grad_ref(a.id).noalias() += g * value(b).transpose();
    if (rg(b)) grad_ref(b.id).noalias() += value(a).transpose() * g;
  });
}

template <class T>
Var Tape<T>::transpose(Var a) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).transpose(), rg(a), [this, id, a] {
    grad_ref(a.id) += nodes_[static_cast<std::size_t>(id)].grad.transpose();
  });
}

template <class T>
Var Tape<T>::add(Var a, Var b) {
  require_same(value(a), value(b), "add");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) + value(b), rg(a) || rg(b), [this, id, a, b] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (rg(a)) grad_ref(a.id) += g;
    if (rg(b)) grad_ref(b.id) += g;
  });
}

template <class T>
Var Tape<T>::sub(Var a, Var b) {
  require_same(value(a), value(b), "sub");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) - value(b), rg(a) || rg(b), [this, id, a, b] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (rg(a)) grad_ref(a.id) += g;
    if (rg(b)) grad_ref(b.id) -= g;
  });
}

template <class T>
Var Tape<T>::hadamard(Var a, Var b) {
  require_same(value(a), value(b), "hadamard");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).cwiseProduct(value(b)), rg(a) || rg(b), [this, id, a, b] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (rg(a)) grad_ref(a.id) += g.cwiseProduct(value(b));
    if (rg(b)) grad_ref(b.id) += g.cwiseProduct(value(a));
  });
}

template <class T>
Var Tape<T>::scale(Var a, T s) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) * s, rg(a), [this, id, a, s] {
    grad_ref(a.id) += nodes_[static_cast<std::size_t>(id)].grad * s;
  });
}

template <class T>
Var Tape<T>::add_row(Var a, Var row) {
  const Matrix& av = value(a);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row: " + shape_of(rv.rows(), rv.cols()) + " onto " + shape_of(av.rows(), av.cols()));
  }
  Matrix out = av;
  out.rowwise() += rv.row(0);
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a) || rg(row), [this, id, a, row] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (rg(a)) grad_ref(a.id) += g;
    if (rg(row)) grad_ref(row.id) += g.colwise().sum();
  });
}

template <class T>
Var Tape<T>::broadcast_add(Var col, Var row) {
  const Matrix& cv = value(col);
  const Matrix& rv = value(row);
  if (cv.cols() != 1 || rv.rows() != 1) {
    throw ShapeError("broadcast_add: expects a column and a row");
  }
  Matrix out(cv.rows(), rv.cols());
  for (Eigen::Index i = 0; i < cv.rows(); ++i) out.row(i) = rv.row(0).array() + cv(i, 0);
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(col) || rg(row), [this, id, col, row] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (rg(col)) grad_ref(col.id) += g.rowwise().sum();
    if (rg(row)) grad_ref(row.id) += g.colwise().sum();
  });
}

template <class T>
Var Tape<T>::mul_const(Var a, const Matrix& c) {
  require_same(value(a), c, "mul_const");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).cwiseProduct(c), rg(a), [this, id, a, c] {
    grad_ref(a.id) += nodes_[static_cast<std::size_t>(id)].grad.cwiseProduct(c);
  });
}

template <class T>
Var Tape<T>::add_const(Var a, const Matrix& c) {
  require_same(value(a), c, "add_const");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) + c, rg(a), [this, id, a] {
    grad_ref(a.id) += nodes_[static_cast<std::size_t>(id)].grad;
  });
}

template <class T>
Var Tape<T>::sigmoid(Var a) {
  Matrix out = value(a).unaryExpr([](T x) { return T(1) / (T(1) + std::exp(-x)); });
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a] {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    grad_ref(a.id).array() += n.grad.array() * n.value.array() * (T(1) - n.value.array());
  });
}

template <class T>
Var Tape<T>::tanh(Var a) {
  Matrix out = value(a).array().tanh().matrix();
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a] {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    grad_ref(a.id).array() += n.grad.array() * (T(1) - n.value.array().square());
  });
}

template <class T>
Var Tape<T>::relu(Var a) {
  Matrix out = value(a).cwiseMax(T(0));
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a] {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    grad_ref(a.id).array() += (value(a).array() > T(0)).select(n.grad.array(), T(0));
  });
}

template <class T>
Var Tape<T>::elu(Var a) {
  Matrix out = value(a).unaryExpr([](T x) { return x > T(0) ? x : std::expm1(x); });
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a] {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const auto& x = value(a).array();
    grad_ref(a.id).array() += n.grad.array() * (x > T(0)).select(Matrix::Ones(x.rows(), x.cols()).array(),
                                                               n.value.array() + T(1));
  });
}

template <class T>
Var Tape<T>::leaky_relu(Var a, T slope) {
  Matrix out = value(a).unaryExpr([slope](T x) { return x > T(0) ? x : slope * x; });
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a, slope] {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    grad_ref(a.id).array() += (value(a).array() > T(0)).select(n.grad.array(), n.grad.array() * slope);
  });
}

template <class T>
Var Tape<T>::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool any = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += value(p).cols();
    any = any || rg(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), any, [this, id, parts] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    Eigen::Index off = 0;
    for (Var p : parts) {
      const Eigen::Index c = value(p).cols();
      if (rg(p)) grad_ref(p.id) += g.middleCols(off, c);
      off += c;
    }
  });
}

template <class T>
Var Tape<T>::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  bool any = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += value(p).rows();
    any = any || rg(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleRows(at, value(p).rows()) = value(p);
    at += value(p).rows();
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), any, [this, id, parts] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    Eigen::Index off = 0;
    for (Var p : parts) {
      const Eigen::Index r = value(p).rows();
      if (rg(p)) grad_ref(p.id) += g.middleRows(off, r);
      off += r;
    }
  });
}

template <class T>
Var Tape<T>::slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  const Matrix& av = value(a);
  if (start < 0 || count < 0 || start + count > av.rows()) throw ShapeError("slice_rows: out of range");
  const int id = static_cast<int>(nodes_.size());
  return push(av.middleRows(start, count), rg(a), [this, id, a, start, count] {
    grad_ref(a.id).middleRows(start, count) += nodes_[static_cast<std::size_t>(id)].grad;
  });
}

template <class T>
Var Tape<T>::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const Matrix& av = value(a);
  if (start < 0 || count < 0 || start + count > av.cols()) throw ShapeError("slice_cols: out of range");
  const int id = static_cast<int>(nodes_.size());
  return push(av.middleCols(start, count), rg(a), [this, id, a, start, count] {
    grad_ref(a.id).middleCols(start, count) += nodes_[static_cast<std::size_t>(id)].grad;
  });
}

template <class T>
Var Tape<T>::shift_rows(Var a, Eigen::Index k) {
  const Matrix& av = value(a);
  const Eigen::Index n = av.rows();
  Matrix out = Matrix::Zero(n, av.cols());
  const Eigen::Index len = std::max<Eigen::Index>(0, n - std::abs(k));
  if (len > 0) {
    if (k >= 0) {
      out.bottomRows(len) = av.topRows(len);
    } else {
      out.topRows(len) = av.bottomRows(len);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a, k, len] {
    if (len == 0) return;
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (k >= 0) {
      grad_ref(a.id).topRows(len) += g.bottomRows(len);
    } else {
      grad_ref(a.id).bottomRows(len) += g.topRows(len);
    }
  });
}

template <class T>
Var Tape<T>::row_softmax(Var a) {
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    const T m = av.row(i).maxCoeff();
    if (!std::isfinite(m)) throw InvariantError("row_softmax: row " + std::to_string(i) + " has no finite entry");
    out.row(i) = (av.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a] {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const auto dot = (n.grad.cwiseProduct(n.value)).rowwise().sum();
    Matrix& ga = grad_ref(a.id);
    for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
      ga.row(i).array() += n.value.row(i).array() * (n.grad.row(i).array() - dot(i));
    }
  });
}

template <class T>
Var Tape<T>::max_rows(Var a, const std::vector<bool>& mask) {
  const Matrix& av = value(a);
  if (static_cast<Eigen::Index>(mask.size()) != av.rows()) throw ShapeError("max_rows: mask length");
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(av.cols()), -1);
  Matrix out(1, av.cols());
  for (Eigen::Index c = 0; c < av.cols(); ++c) {
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
      if (!mask[static_cast<std::size_t>(r)]) continue;
      auto& best = arg[static_cast<std::size_t>(c)];
      if (best < 0 || av(r, c) > av(best, c)) best = r;
    }
    if (arg[static_cast<std::size_t>(c)] < 0) throw ShapeError("max_rows: every row is masked");
    out(0, c) = av(arg[static_cast<std::size_t>(c)], c);
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a, arg] {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    Matrix& ga = grad_ref(a.id);
    for (std::size_t c = 0; c < arg.size(); ++c) ga(arg[c], static_cast<Eigen::Index>(c)) += g(0, static_cast<Eigen::Index>(c));
  });
}

template <class T>
Var Tape<T>::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a), [this, id, a] {
    grad_ref(a.id).array() += nodes_[static_cast<std::size_t>(id)].grad(0, 0);
  });
}

template <class T>
Var Tape<T>::cosine(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  require_same(av, bv, "cosine");
  if (av.rows() != 1) throw ShapeError("cosine: expects row vectors");
  const T na = av.norm();
  const T nb = bv.norm();
  if (na == T(0) || nb == T(0)) throw InvariantError("cosine similarity of a zero vector is undefined");
  const T dot = av.row(0).dot(bv.row(0));
  Matrix out(1, 1);
  out(0, 0) = dot / (na * nb);
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), rg(a) || rg(b), [this, id, a, b, na, nb] {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const T g = n.grad(0, 0);
    const T s = n.value(0, 0);
    // d cos / d a = b / (|a||b|) - cos * a / |a|^2
    if (rg(a)) grad_ref(a.id) += g * (value(b) / (na * nb) - s * value(a) / (na * na));
    if (rg(b)) grad_ref(b.id) += g * (value(a) / (na * nb) - s * value(b) / (nb * nb));
  });
}

template <class T>
void Tape<T>::backward(Var out) {
  const std::size_t last = check(out);
  if (nodes_[last].value.rows() != 1 || nodes_[last].value.cols() != 1) {
    throw ShapeError("backward: target must be a scalar");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  table_grads_.clear();
  if (!nodes_[last].requires_grad) return;
  grad_ref(out.id)(0, 0) = T(1);
  for (std::size_t i = last + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.back && n.grad.size() != 0) n.back();
  }
}

template <class T>
void Tape<T>::accumulate(Gradients<T>& grads) const {
  for (const auto& [name, id] : param_ids_) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    auto it = grads.find(name);
    if (it == grads.end()) {
      grads.emplace(name, n.grad);
    } else {
      it->second += n.grad;
    }
  }
  for (const auto& [name, rows] : table_grads_) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      const Matrix& t = table(name);
      it = grads.emplace(name, Matrix::Zero(t.rows(), t.cols())).first;
    }
    for (const auto& [r, g] : rows) it->second.row(r) += g;
  }
}

template struct ParamStore<float>;
template struct ParamStore<double>;
template class Tape<float>;
template class Tape<double>;
template void add_into<float>(Gradients<float>&, const Gradients<float>&);
template void add_into<double>(Gradients<double>&, const Gradients<double>&);

}  // namespace cssam::nn
