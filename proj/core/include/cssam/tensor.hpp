#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace cssam::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Named trainable tensors. Names are dotted paths ("cress.block1.enc.w").
template <class T>
struct ParamStore {
  std::map<std::string, Mat<T>> tensors;
  std::set<std::string> frozen;

  bool contains(const std::string& name) const { return tensors.count(name) != 0; }
  const Mat<T>& at(const std::string& name) const;
  Mat<T>& at(const std::string& name);
  bool trainable(const std::string& name) const { return frozen.count(name) == 0; }
  std::size_t scalar_count() const;

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, m] : tensors) out.tensors.emplace(name, m.template cast<U>());
    out.frozen = frozen;
    return out;
  }
};

// Dense gradient per parameter name. Only trainable tensors that took part
// in a computation appear.
template <class T>
using Gradients = std::map<std::string, Mat<T>>;

template <class T>
void add_into(Gradients<T>& dst, const Gradients<T>& src);

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Every op records its value eagerly and a closure that
// pushes the output gradient back to its inputs. A tape is single-use and
// single-threaded; build one per example.
template <class T>
class Tape {
 public:
  using Matrix = Mat<T>;

  // With record_grad off no parameter requires a gradient, so no backward
  // closures are kept (inference).
  explicit Tape(const ParamStore<T>* store = nullptr, bool record_grad = true)
      : store_(store), record_grad_(record_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(const std::string& name);
  // Embedding lookup: row ids[i] of table `name`; gradients are scattered
  // back into the table rows.
  Var gather_rows(const std::string& name, const std::vector<int>& ids);
  // Row i is the mean of the table rows listed in groups[i] (zero if empty).
  Var gather_mean_rows(const std::string& name, const std::vector<std::vector<int>>& groups);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, T s);
  Var add_row(Var a, Var row);               // broadcast a 1×m row over every row
  Var broadcast_add(Var col, Var row);       // (n×1) + (1×m) -> n×m
  Var mul_const(Var a, const Matrix& c);     // element-wise, c not differentiated
  Var add_const(Var a, const Matrix& c);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var elu(Var a);
  Var leaky_relu(Var a, T slope);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
  // out[i] = a[i - k], zero where i - k falls outside.
  Var shift_rows(Var a, Eigen::Index k);
  // Softmax along each row; -inf entries get weight 0. Each row needs at
  // least one finite entry.
  Var row_softmax(Var a);
  // Column-wise max over rows whose mask entry is true -> 1×m.
  Var max_rows(Var a, const std::vector<bool>& mask);
  Var sum(Var a);
  // Cosine similarity of two equal-length row vectors -> 1×1. Throws
  // InvariantError on a zero vector.
  Var cosine(Var a, Var b);

  const Matrix& value(Var v) const { return nodes_[check(v)].value; }
  // Gradient of the last backward() target; zero-sized if v did not
  // contribute.
  const Matrix& grad(Var v) const { return nodes_[check(v)].grad; }
  bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(out)/d(out) = 1 for a 1×1 output and runs the closures in
  // reverse creation order.
  void backward(Var out);
  // Adds parameter and table gradients into `grads`.
  void accumulate(Gradients<T>& grads) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void()> back;
  };

  std::size_t check(Var v) const;
  Var push(Matrix value, bool requires_grad, std::function<void()> back = {});
  Matrix& grad_ref(int id);
  bool rg(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  const Matrix& table(const std::string& name) const;

  bool trainable(const std::string& name) const { return record_grad_ && store_->trainable(name); }

  const ParamStore<T>* store_;
  bool record_grad_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_ids_;
  std::map<std::string, std::map<int, Eigen::Matrix<T, 1, Eigen::Dynamic>>> table_grads_;
};

extern template class Tape<float>;
extern template class Tape<double>;
extern template struct ParamStore<float>;
extern template struct ParamStore<double>;

}  // namespace cssam::nn
