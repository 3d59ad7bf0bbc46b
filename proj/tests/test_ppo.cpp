#include <doctest.h>

#include <cmath>
#include <random>

#include "hypersam/marl/ppo.hpp"
#include "hypersam/marl/rollout.hpp"
#include "hypersam/nn/optim.hpp"
#include "support.hpp"

using namespace hypersam;
using nn::Matrix;
using nn::Tensor;

TEST_CASE("clipped surrogate fixture") {
  const double logp_new[] = {std::log(2.0)};
  const double logp_old[] = {0.0};
  const double adv[] = {1.0};
  CHECK(marl::actor_loss(logp_new, logp_old, adv, 0.0, 0.2, 0.0) == doctest::Approx(-1.2).epsilon(1e-15));

  const double neg_adv[] = {-1.0};
  CHECK(marl::actor_loss(logp_new, logp_old, neg_adv, 0.0, 0.2, 0.0) == doctest::Approx(2.0).epsilon(1e-15));

  const double half[] = {std::log(0.5)};
  CHECK(marl::actor_loss(half, logp_old, neg_adv, 0.0, 0.2, 0.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(marl::actor_loss(half, logp_old, adv, 0.0, 0.2, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("entropy bonus enters with its coefficient") {
  const double logp[] = {0.0, 0.0};
  const double adv[] = {1.0, 3.0};
  CHECK(marl::actor_loss(logp, logp, adv, 1.5, 0.2, 0.01) == doctest::Approx(-2.0 - 0.015).epsilon(1e-15));
}

TEST_CASE("value clipping fixtures") {
  // unclipped (0.5 - 1)^2 = 0.25, clipped (0.2 - 1)^2 = 0.64: the max picks the clipped term.
  const double v_new[] = {0.5};
  const double v_old[] = {0.0};
  const double ret[] = {1.0};
  CHECK(marl::critic_loss(v_new, v_old, ret, 0.2) == doctest::Approx(0.64).epsilon(1e-15));
  // unclipped (1 - 0.5)^2 = 0.25, clipped (0.2 - 0.5)^2 = 0.09: the max picks the unclipped term.
  const double v_new2[] = {1.0};
  const double ret2[] = {0.5};
  CHECK(marl::critic_loss(v_new2, v_old, ret2, 0.2) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("differentiable losses agree with the scalar ones") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial;
    std::vector<double> lp_new(n), lp_old(n), adv(n), v_new(n), v_old(n), ret(n);
    for (int i = 0; i < n; ++i) {
      lp_new[i] = 0.3 * normal(rng);
      lp_old[i] = 0.3 * normal(rng);
      adv[i] = normal(rng);
      v_new[i] = normal(rng);
      v_old[i] = v_new[i] + 0.3 * normal(rng);
      ret[i] = normal(rng);
    }
    const Tensor lp = Tensor::constant(Eigen::Map<Matrix>(lp_new.data(), n, 1));
    const Tensor v = Tensor::constant(Eigen::Map<Matrix>(v_new.data(), n, 1));
    CHECK(marl::actor_loss(lp, lp_old, adv, Tensor::scalar(0.7), 0.2, 0.01).item() ==
          doctest::Approx(marl::actor_loss(lp_new, lp_old, adv, 0.7, 0.2, 0.01)).epsilon(1e-12));
    CHECK(marl::critic_loss(v, v_old, ret, 0.2).item() ==
          doctest::Approx(marl::critic_loss(v_new, v_old, ret, 0.2)).epsilon(1e-12));
  }
}

TEST_CASE("positive advantage pushes log-probability up") {
  Tensor lp = Tensor::parameter(Matrix::Constant(1, 1, 0.05));
  const double old[] = {0.0};
  const double adv[] = {1.0};
  marl::actor_loss(lp, old, adv, Tensor::scalar(0.0), 0.2, 0.0).backward();
  CHECK(lp.grad()(0, 0) < 0.0);

  Tensor outside = Tensor::parameter(Matrix::Constant(1, 1, std::log(1.5)));
  marl::actor_loss(outside, old, adv, Tensor::scalar(0.0), 0.2, 0.0).backward();
  CHECK((!outside.has_grad() || outside.grad()(0, 0) == 0.0));
}

TEST_CASE("gae degenerate lambdas match the discounted-return oracle") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 30;
    const double gamma = 0.9 + 0.099 * (trial % 7) / 6.0;
    std::vector<double> r(n), v(n + 1);
    for (auto& x : r) x = normal(rng);
    for (auto& x : v) x = normal(rng);
    if (trial % 3 == 0) v[n] = 0.0;

    const auto a0 = marl::gae(r, v, gamma, 0.0);
    for (int t = 0; t < n; ++t) CHECK(a0[t] == doctest::Approx(r[t] + gamma * v[t + 1] - v[t]).epsilon(1e-12));

    const auto a1 = marl::gae(r, v, gamma, 1.0);
    const auto g = testsupport::discounted_returns(r, gamma);
    for (int t = 0; t < n; ++t) {
      const double oracle = g[t] + std::pow(gamma, n - t) * v[n] - v[t];
      CHECK(a1[t] == doctest::Approx(oracle).epsilon(1e-10));
    }

    const auto mid = marl::gae(r, v, gamma, 0.7);
    const auto brute = testsupport::brute_force_gae(r, v, gamma, 0.7);
    for (int t = 0; t < n; ++t) CHECK(mid[t] == doctest::Approx(brute[t]).epsilon(1e-10));
  }
}

TEST_CASE("smdp gae with unit durations is gae") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<double> r(12), v(13);
  for (auto& x : r) x = normal(rng);
  for (auto& x : v) x = normal(rng);
  const std::vector<int> ones(12, 1);
  const auto a = marl::gae(r, v, 0.97, 0.9);
  const auto b = marl::smdp_gae(r, v, ones, 0.97, 0.9);
  for (int t = 0; t < 12; ++t) CHECK(a[t] == doctest::Approx(b[t]).epsilon(1e-12));

  const std::vector<int> durations = {3, 1, 5};
  const std::vector<double> r3 = {1.0, -2.0, 0.5};
  const std::vector<double> v3 = {0.2, -0.1, 0.4, 0.3};
  const auto s = marl::smdp_gae(r3, v3, durations, 0.9, 0.0);
  CHECK(s[0] == doctest::Approx(1.0 + std::pow(0.9, 3) * -0.1 - 0.2));
  CHECK(s[2] == doctest::Approx(0.5 + std::pow(0.9, 5) * 0.3 - 0.4));
}

TEST_CASE("macro reward discounts within the segment") {
  const std::vector<double> r = {1.0, 2.0, 3.0};
  CHECK(marl::macro_reward(r, 0.5) == doctest::Approx(1.0 + 1.0 + 0.75));
}

TEST_CASE("normalize gives zero mean and unit std") {
  std::vector<double> x = {1.0, 2.0, 3.0, 10.0};
  marl::normalize(x);
  double m = 0.0, s = 0.0;
  for (double v : x) m += v;
  m /= x.size();
  for (double v : x) s += (v - m) * (v - m);
  CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::sqrt(s / x.size()) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("adam with zero learning rate leaves parameters unchanged") {
  Tensor w = Tensor::parameter(Matrix::Constant(2, 2, 0.5));
  nn::Adam adam({{"w", w}}, 0.0);
  for (int i = 0; i < 3; ++i) {
    adam.zero_grad();
    nn::sum(nn::square(w)).backward();
    adam.step();
  }
  CHECK(w.value() == Matrix::Constant(2, 2, 0.5));
}

TEST_CASE("ppo update with zero learning rate leaves the policy unchanged") {
  ScenarioConfig config = preset("smoke");
  config.model = {8, 2, 1, 8};
  config.max_steps = 40;
  config.train.lr = 0.0;
  marl::Policy policy(config, marl::Architecture::Hyper, 5);
  const auto before = policy.to_checkpoint();
  nn::Adam adam(policy.parameters(), 0.0);
  std::mt19937_64 seeds(1), actions(2), update(3);
  marl::RolloutBuffer buffer = marl::collect_rollout(policy, 40, seeds, actions);
  marl::compute_advantages(buffer, config.train);
  marl::ppo_update(policy, adam, buffer, config.train, update);
  const auto after = policy.to_checkpoint();
  REQUIRE(before.tensors.size() == after.tensors.size());
  for (std::size_t i = 0; i < before.tensors.size(); ++i) CHECK(before.tensors[i].value == after.tensors[i].value);
}

TEST_CASE("ppo update improves the surrogate on a fixed batch") {
  ScenarioConfig config = preset("smoke");
  config.model = {8, 2, 1, 8};
  config.max_steps = 60;
  config.train.lr = 1e-3;
  config.train.ppo_epochs = 1;
  marl::Policy policy(config, marl::Architecture::Hyper, 6);
  nn::Adam adam(policy.parameters(), config.train.lr);
  std::mt19937_64 seeds(4), actions(5), update(6);
  marl::RolloutBuffer buffer = marl::collect_rollout(policy, 120, seeds, actions);
  marl::compute_advantages(buffer, config.train);
  const auto stats = marl::ppo_update(policy, adam, buffer, config.train, update);
  CHECK(stats.minibatches > 0);
  CHECK(std::isfinite(stats.local_policy_loss));
  CHECK(std::isfinite(stats.macro_value_loss));
  CHECK(stats.approx_kl >= -1e-9);
}
