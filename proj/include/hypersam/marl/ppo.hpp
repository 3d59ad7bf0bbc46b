#pragma once

#include <span>
#include <vector>

#include "hypersam/nn/tensor.hpp"

namespace hypersam::marl {

// sum_t gamma^t r_t over one macro segment.
double macro_reward(std::span<const double> rewards, double gamma);

// values has one more entry than rewards (the bootstrap value, 0 after a terminal step).
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double gamma, double lambda);

// Semi-Markov variant: transition k lasts durations[k] steps and discounts by gamma^durations[k].
std::vector<double> smdp_gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const int> durations, double gamma, double lambda);

// In place: mean 0, std 1 (left centred only when the std vanishes).
void normalize(std::vector<double>& x);

// -(mean_i min(r_i A_i, clip(r_i, 1-eps, 1+eps) A_i)) - kappa * entropy, r_i = exp(logp_new - logp_old).
double actor_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                  std::span<const double> advantages, double entropy, double clip, double kappa);

// mean_i max((v_i - R_i)^2, (clip(v_i, old_i - eps, old_i + eps) - R_i)^2)
double critic_loss(std::span<const double> values_new, std::span<const double> values_old,
                   std::span<const double> returns, double clip);

// Differentiable versions; logp_new / values_new are n x 1 columns, entropy is 1 x 1.
nn::Tensor actor_loss(const nn::Tensor& logp_new, std::span<const double> logp_old,
                      std::span<const double> advantages, const nn::Tensor& entropy, double clip,
                      double kappa);
nn::Tensor critic_loss(const nn::Tensor& values_new, std::span<const double> values_old,
                       std::span<const double> returns, double clip);

}  // namespace hypersam::marl
