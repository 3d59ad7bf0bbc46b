#include "hypersam/nn/gradcheck.hpp"

#include <algorithm>

namespace hypersam::nn {

GradCheckResult gradient_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                               double h) {
  for (const auto& in : inputs) in.node()->grad.resize(0, 0);
  f().backward();

  GradCheckResult result;
  for (const auto& in : inputs) {
    Matrix analytic = in.has_grad() ? in.grad() : Matrix::Zero(in.rows(), in.cols());
    Matrix numeric(in.rows(), in.cols());
    Matrix& value = in.node()->value;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      double plus, minus;
      {
        NoGradGuard guard;
        value.data()[i] = saved + h;
        plus = f().item();
        value.data()[i] = saved - h;
        minus = f().item();
      }
      value.data()[i] = saved;
      numeric.data()[i] = (plus - minus) / (2.0 * h);
    }
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
    const double rel = (analytic - numeric).norm() / scale;
    result.relative_errors.push_back(rel);
    result.max_relative_error = std::max(result.max_relative_error, rel);
    in.node()->grad.resize(0, 0);
  }
  return result;
}

}  // namespace hypersam::nn
