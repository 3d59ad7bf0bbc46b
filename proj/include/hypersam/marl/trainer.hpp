#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "hypersam/marl/rollout.hpp"
#include "hypersam/nn/optim.hpp"

namespace hypersam::marl {

struct TrainOptions {
  // Empty: nothing is written.
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  // Called after every update with (environment steps so far, stats).
  std::function<void(std::int64_t, const UpdateStats&)> on_update;
};

struct TrainResult {
  Policy policy;
  std::vector<EpisodeLog> episodes;
  std::vector<UpdateStats> updates;
  std::int64_t steps = 0;
};

class Trainer {
 public:
  Trainer(const ScenarioConfig& config, Architecture arch, std::uint64_t seed);

  // Collect/update until train.total_steps environment steps have been used.
  TrainResult run(const TrainOptions& options = {});

  const Policy& policy() const { return policy_; }
  std::int64_t steps() const { return steps_; }

  void save(const std::filesystem::path& path) const;
  // Restores parameters, optimizer state, counters and generators.
  void restore(const std::filesystem::path& path);

 private:
  ScenarioConfig config_;
  Policy policy_;
  nn::Adam optimizer_;
  std::mt19937_64 seed_rng_;
  std::mt19937_64 action_rng_;
  std::mt19937_64 update_rng_;
  std::int64_t steps_ = 0;
  int updates_ = 0;
};

// Mean episode reward over the episodes ending in the first and in the last
// `fraction` of the step budget.
std::pair<double, double> reward_trend(const std::vector<EpisodeLog>& episodes, std::int64_t total_steps,
                                       double fraction = 0.1);

}  // namespace hypersam::marl
