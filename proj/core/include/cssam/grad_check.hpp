#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "cssam/tensor.hpp"

namespace cssam::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  // Denominator floor of the relative error, so that gradients that are
  // zero up to rounding compare on an absolute scale.
  double floor = 1e-6;
  // Coordinates whose one-sided differences disagree by more than this
  // (relative) sit on a kink of a piecewise op and are skipped.
  double kink_tolerance = 1e-3;
  std::uint64_t projection_seed = 7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]" of the worst coordinate
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

// Compares the tape's analytic gradients with central finite differences
// for every coordinate of every trainable tensor in `store`. The function
// may return a tensor of any shape; it is reduced to a scalar through a
// fixed random projection.
using ForwardFn = std::function<Var(Tape<double>&)>;

GradCheckResult grad_check(const ForwardFn& forward, ParamStore<double>& store,
                           const GradCheckOptions& options = {});

}  // namespace cssam::nn
