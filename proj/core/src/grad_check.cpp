#include "cssam/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cssam/error.hpp"

namespace cssam::nn {

namespace {

class Projected {
 public:
  Projected(const ForwardFn& forward, std::uint64_t seed) : forward_(forward), seed_(seed) {}

  Var operator()(Tape<double>& tape) {
    const Var out = forward_(tape);
    const auto& v = tape.value(out);
    if (projection_.rows() != v.rows() || projection_.cols() != v.cols()) {
      std::mt19937_64 rng(seed_);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      projection_.resize(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < projection_.size(); ++i) projection_.data()[i] = unit(rng);
    }
    return tape.sum(tape.mul_const(out, projection_));
  }

  double value(const ParamStore<double>& store) {
    Tape<double> tape(&store);
    return tape.value((*this)(tape))(0, 0);
  }

 private:
  const ForwardFn& forward_;
  std::uint64_t seed_;
  Mat<double> projection_;
};

}  // namespace

GradCheckResult grad_check(const ForwardFn& forward, ParamStore<double>& store, const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ConfigError("grad_check: eps must be positive");
  Projected f(forward, options.projection_seed);

  Gradients<double> analytic;
  {
    Tape<double> tape(&store);
    const Var out = f(tape);
    tape.backward(out);
    tape.accumulate(analytic);
  }

  GradCheckResult result;
  for (auto& [name, tensor] : store.tensors) {
    if (!store.trainable(name)) continue;
    const auto it = analytic.find(name);
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      double& x = tensor.data()[i];
      const double saved = x;
      const double f0 = f.value(store);
      x = saved + options.eps;
      const double fp = f.value(store);
      x = saved - options.eps;
      const double fm = f.value(store);
      x = saved;

      const double forward_diff = (fp - f0) / options.eps;
      const double backward_diff = (f0 - fm) / options.eps;
      const double spread = std::abs(forward_diff - backward_diff);
      if (spread > options.kink_tolerance * std::max({1.0, std::abs(forward_diff), std::abs(backward_diff)})) {
        ++result.skipped_kinks;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * options.eps);
      const double a = it == analytic.end() ? 0.0 : it->second.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (result.worst.empty() || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace cssam::nn
