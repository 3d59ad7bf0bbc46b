#include "hypersam/metrics.hpp"

#include <algorithm>

namespace hypersam::metrics {

double allocation_score(int explored, int n_pois) {
  return n_pois > 0 ? 100.0 * explored / n_pois : 0.0;
}

double allocation_score(const EpisodeReport& r) {
  int total = 0;
  for (int n : r.explored_per_robot) total += n;
  return allocation_score(r.explored_per_robot.empty() ? r.explored : total, r.n_pois);
}

double social_score_proxy(const EpisodeReport& r, double t_max, const SocialProxyConfig& c) {
  double s = 100.0;
  if (r.collision) s -= c.collision_penalty;
  s -= c.discomfort_penalty * r.discomfort_steps;
  if (r.timeout) s -= c.timeout_penalty;
  s -= c.time_penalty * std::max(0.0, r.completion_time / t_max - 0.5) / 0.5;
  return std::clamp(s, 0.0, 100.0);
}

EpisodeTracker::EpisodeTracker(const env::WorldState& initial) {
  report_.seed = initial.seed;
  report_.n_pois = static_cast<int>(initial.pois.size());
  report_.explored_per_robot.assign(initial.robots.size(), 0);
  report_.path_length.assign(initial.robots.size(), 0.0);
  discomfort_distance_ = initial.config->discomfort_distance;
}

void EpisodeTracker::record(const env::WorldState& before, const env::WorldState& after,
                            const std::vector<double>& rewards) {
  bool discomfort = false;
  for (std::size_t i = 0; i < after.robots.size(); ++i) {
    report_.path_length[i] += distance(before.robots[i].position, after.robots[i].position);
    if (env::nearest_human_gap(after, static_cast<int>(i)) <= discomfort_distance_) discomfort = true;
  }
  if (discomfort) ++report_.discomfort_steps;
  double sum = 0.0;
  for (double r : rewards) sum += r;
  if (!rewards.empty()) report_.mean_reward += sum / rewards.size();
}

EpisodeReport EpisodeTracker::finish(const env::WorldState& w) const {
  EpisodeReport r = report_;
  r.steps = w.step_index;
  r.completion_time = w.t;
  r.explored = env::explored_count(w);
  std::fill(r.explored_per_robot.begin(), r.explored_per_robot.end(), 0);
  for (const auto& p : w.pois) {
    if (p.status() == env::PoiStatus::Explored) ++r.explored_per_robot[p.robot()];
  }
  for (const auto& e : w.events) {
    if (e.kind == env::EventKind::RobotRobotCollision || e.kind == env::EventKind::RobotHumanCollision) r.collision = true;
    if (e.kind == env::EventKind::Timeout) r.timeout = true;
    if (e.kind == env::EventKind::AllPoisExplored) r.success = true;
  }
  if (r.collision) r.success = false;
  r.allocation_score = allocation_score(r);
  r.social_score = social_score_proxy(r, w.config->t_max(), w.config->social);
  return r;
}

}  // namespace hypersam::metrics
