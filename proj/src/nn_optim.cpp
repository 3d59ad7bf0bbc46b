#include "hypersam/nn/optim.hpp"

#include <cmath>

namespace hypersam::nn {

Adam::Adam(ParamList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.push_back(Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
    v_.push_back(Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    if (!p.has_grad()) {
      m_[i] *= beta1_;
      v_[i] *= beta2_;
    } else {
      const Matrix& g = p.grad();
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseAbs2();
    }
    const Matrix m_hat = m_[i] / c1;
    const Matrix v_hat = v_[i] / c2;
    p.mutable_value().array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.tensor.has_grad()) sq += p.tensor.grad().squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_grad_norm(const ParamList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const auto& p : params) {
      if (p.tensor.has_grad()) p.tensor.node()->grad *= s;
    }
  }
  return norm;
}

bool grads_finite(const ParamList& params) {
  for (const auto& p : params) {
    if (p.tensor.has_grad() && !p.tensor.grad().allFinite()) return false;
  }
  return true;
}

bool values_finite(const ParamList& params) {
  for (const auto& p : params) {
    if (!p.tensor.value().allFinite()) return false;
  }
  return true;
}

}  // namespace hypersam::nn
