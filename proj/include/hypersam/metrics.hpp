#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypersam/config.hpp"
#include "hypersam/env.hpp"

namespace hypersam::metrics {

struct EpisodeReport {
  std::uint64_t seed = 0;
  double allocation_score = 0.0;
  double social_score = 0.0;  // SS-proxy
  bool success = false;
  bool collision = false;
  bool timeout = false;
  int discomfort_steps = 0;
  double completion_time = 0.0;
  int steps = 0;
  int explored = 0;
  int n_pois = 0;
  std::vector<int> explored_per_robot;
  std::vector<double> path_length;
  double mean_reward = 0.0;  // summed per robot, averaged over robots
};

// 100 * explored / n_pois
double allocation_score(int explored, int n_pois);
double allocation_score(const EpisodeReport& report);

// clamp(100 - c[collision] - d * discomfort_steps - o[timeout]
//       - s * max(0, completion_time / t_max - 0.5) / 0.5, 0, 100)
double social_score_proxy(const EpisodeReport& report, double t_max, const SocialProxyConfig& c);

// Accumulates an EpisodeReport while an episode runs.
class EpisodeTracker {
 public:
  EpisodeTracker(const env::WorldState& initial);
  // Call after every step with the world after the step, its events and the rewards.
  void record(const env::WorldState& before, const env::WorldState& after, const std::vector<double>& rewards);
  EpisodeReport finish(const env::WorldState& final_world) const;

 private:
  EpisodeReport report_;
  double discomfort_distance_ = 0.45;
};

}  // namespace hypersam::metrics
