#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hypersam/marl/policy.hpp"
#include "hypersam/nn/optim.hpp"

namespace hypersam::marl {

// One robot's stretch of an episode between two decision steps: the macro
// transition plus every local step taken under it.
struct Segment {
  int episode = 0;
  int robot = 0;
  SceneInput input;
  std::vector<int> candidates;
  int head = -1;  // sampled index into candidates; -1 when no POI was left to choose
  double logp = 0.0;
  Eigen::RowVectorXd joint;  // macro critic input at the decision step
  double value = 0.0;

  Matrix local_features;  // L x kLocalFeatures
  Matrix local_joint;     // L x joint_state_size
  std::vector<Vec2> samples;
  std::vector<double> local_logp;
  std::vector<double> local_values;
  std::vector<double> rewards;  // unscaled environment rewards
  bool episode_end = false;

  // Filled by compute_advantages.
  double macro_return = 0.0;
  double macro_advantage = 0.0;
  std::vector<double> local_returns;
  std::vector<double> local_advantages;

  int length() const { return static_cast<int>(rewards.size()); }
  bool has_macro() const { return head >= 0; }
};

struct EpisodeLog {
  std::int64_t end_step = 0;  // cumulative environment steps when the episode ended
  int steps = 0;
  double reward = 0.0;  // summed reward, averaged over robots
  int explored = 0;
  int n_pois = 0;
  bool success = false;
  bool collision = false;
  bool timeout = false;
};

struct RolloutBuffer {
  std::vector<Segment> segments;
  std::vector<EpisodeLog> episodes;
  std::int64_t steps = 0;
};

// Runs whole episodes with sampled actions until at least min_steps
// environment steps are collected. Episode seeds come from seed_rng.
RolloutBuffer collect_rollout(const Policy& policy, std::int64_t min_steps, std::mt19937_64& seed_rng,
                              std::mt19937_64& action_rng);

// Appends one episode to the buffer; returns its log entry.
EpisodeLog collect_episode(const Policy& policy, std::uint64_t seed, std::mt19937_64& action_rng,
                           RolloutBuffer& buffer);

// Semi-Markov GAE on the macro stream and GAE on the local stream, per robot
// and episode, over rewards multiplied by reward_scale.
void compute_advantages(RolloutBuffer& buffer, const TrainConfig& train);

struct UpdateStats {
  double macro_policy_loss = 0.0;
  double local_policy_loss = 0.0;
  double macro_value_loss = 0.0;
  double local_value_loss = 0.0;
  double macro_entropy = 0.0;
  double local_entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
  int minibatches = 0;
};

// PPO epochs over the buffer (advantages must be computed). On a numerical
// failure the parameters and optimizer state are restored and NumericalError is rethrown.
UpdateStats ppo_update(Policy& policy, nn::Adam& optimizer, RolloutBuffer& buffer, const TrainConfig& train,
                       std::mt19937_64& rng);

}  // namespace hypersam::marl
