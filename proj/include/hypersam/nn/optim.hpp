#pragma once

#include <cstdint>
#include <vector>

#include "hypersam/nn/layers.hpp"

namespace hypersam::nn {

class Adam {
 public:
  Adam() = default;
  explicit Adam(ParamList params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-5);

  // Parameters without a gradient are treated as having a zero gradient.
  void step();
  void zero_grad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::int64_t steps() const { return t_; }

  // Moment buffers, index-aligned with params(); exposed for checkpointing.
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-5;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Global L2 norm of the gradients in `params`.
double grad_norm(const ParamList& params);
// Rescales gradients so their global norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);
bool grads_finite(const ParamList& params);
bool values_finite(const ParamList& params);

}  // namespace hypersam::nn
