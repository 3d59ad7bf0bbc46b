#pragma once

#include <functional>
#include <vector>

#include "hypersam/nn/tensor.hpp"

namespace hypersam::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  // Per input tensor: ||analytic - numeric|| / max(||analytic||, ||numeric||).
  std::vector<double> relative_errors;
};

// Compares reverse-mode gradients of a scalar-valued function with central
// differences (step h) for each tensor in `inputs`. `f` must rebuild the graph
// from the inputs' current values on every call.
GradCheckResult gradient_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                               double h = 1e-5);

}  // namespace hypersam::nn
