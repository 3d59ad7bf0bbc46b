#include "hypersam/marl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hypersam/errors.hpp"

namespace hypersam::marl {

using nn::Matrix;
using nn::Tensor;

double macro_reward(std::span<const double> rewards, double gamma) {
  double total = 0.0, discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double gamma, double lambda) {
  std::vector<int> ones(rewards.size(), 1);
  return smdp_gae(rewards, values, ones, gamma, lambda);
}

std::vector<double> smdp_gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const int> durations, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || durations.size() != n) {
    throw DimensionMismatch("gae expects len(values) = len(rewards) + 1");
  }
  std::vector<double> adv(n);
  double next = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double discount = std::pow(gamma, durations[i]);
    const double delta = rewards[i] + discount * values[i + 1] - values[i];
    next = delta + discount * lambda * next;
    adv[i] = next;
  }
  return adv;
}

void normalize(std::vector<double>& x) {
  if (x.empty()) return;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / x.size());
  for (double& v : x) v = sd > 1e-8 ? (v - mean) / sd : v - mean;
}

double actor_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                  std::span<const double> advantages, double entropy, double clip, double kappa) {
  const std::size_t n = logp_new.size();
  if (logp_old.size() != n || advantages.size() != n) throw DimensionMismatch("actor_loss lengths differ");
  double surrogate = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = std::exp(logp_new[i] - logp_old[i]);
    if (!std::isfinite(ratio)) throw NumericalError("non-finite probability ratio");
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    surrogate += std::min(ratio * advantages[i], clipped * advantages[i]);
  }
  return -(n ? surrogate / n : 0.0) - kappa * entropy;
}

double critic_loss(std::span<const double> values_new, std::span<const double> values_old,
                   std::span<const double> returns, double clip) {
  const std::size_t n = values_new.size();
  if (values_old.size() != n || returns.size() != n) throw DimensionMismatch("critic_loss lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double clipped = values_old[i] + std::clamp(values_new[i] - values_old[i], -clip, clip);
    total += std::max(std::pow(values_new[i] - returns[i], 2), std::pow(clipped - returns[i], 2));
  }
  return n ? total / n : 0.0;
}

namespace {

Matrix column(std::span<const double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

}  // namespace

Tensor actor_loss(const Tensor& logp_new, std::span<const double> logp_old,
                  std::span<const double> advantages, const Tensor& entropy, double clip,
                  double kappa) {
  const auto n = static_cast<Eigen::Index>(logp_old.size());
  if (logp_new.rows() != n || logp_new.cols() != 1 || static_cast<Eigen::Index>(advantages.size()) != n) {
    throw DimensionMismatch("actor_loss shapes differ");
  }
  Tensor ratio = nn::exp(nn::sub(logp_new, Tensor::constant(column(logp_old))));
  if (!ratio.value().allFinite()) throw NumericalError("non-finite probability ratio");
  Tensor adv = Tensor::constant(column(advantages));
  Tensor surrogate = nn::minimum(nn::mul(ratio, adv), nn::mul(nn::clamp(ratio, 1.0 - clip, 1.0 + clip), adv));
  return nn::sub(nn::scale(nn::mean(surrogate), -1.0), nn::scale(entropy, kappa));
}

Tensor critic_loss(const Tensor& values_new, std::span<const double> values_old,
                   std::span<const double> returns, double clip) {
  const auto n = static_cast<Eigen::Index>(values_old.size());
  if (values_new.rows() != n || values_new.cols() != 1 || static_cast<Eigen::Index>(returns.size()) != n) {
    throw DimensionMismatch("critic_loss shapes differ");
  }
  Tensor old = Tensor::constant(column(values_old));
  Tensor ret = Tensor::constant(column(returns));
  Tensor clipped = nn::add(old, nn::clamp(nn::sub(values_new, old), -clip, clip));
  Tensor a = nn::square(nn::sub(values_new, ret));
  Tensor b = nn::square(nn::sub(clipped, ret));
  return nn::mean(nn::maximum(a, b));
}

}  // namespace hypersam::marl
