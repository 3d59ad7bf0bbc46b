#pragma once

#include <vector>

#include "hypersam/env.hpp"
#include "hypersam/hypergraph.hpp"
#include "hypersam/nn/tensor.hpp"

namespace hypersam::marl {

using nn::Matrix;

// Per-entity token: relative position (2), velocity (2), radius, distance,
// POI status flags (unexplored, assigned to self, assigned to other, explored).
inline constexpr int kTokenFeatures = 10;
// Token kinds: ego robot, other robot, human, POI.
inline constexpr int kTokenKinds = 4;
inline constexpr int kNearestAgents = 3;
// Goal direction (2), goal distance, has-goal flag, own velocity (2), then
// relative position (2), relative velocity (2) and surface gap of the nearest agents.
inline constexpr int kLocalFeatures = 6 + 5 * kNearestAgents;
inline constexpr double kPositionScale = 0.1;

// Everything the encoders need from one robot's observation. Vertex order is
// ego, other robots, humans, POIs.
struct SceneInput {
  Matrix tokens;  // N x kTokenFeatures
  std::vector<int> kinds;
  Matrix sequences;  // (N * frames) x kTokenFeatures, entity-major, oldest frame first
  int frames = 1;
  hg::Hypergraph graph;
  int n_robots = 0;
  int n_humans = 0;
  int n_pois = 0;

  int vertex_count() const { return n_robots + n_humans + n_pois; }
  int poi_row(int poi) const { return n_robots + n_humans + poi; }
};

SceneInput scene_input(const env::Observation& obs, const DiffusionConfig& diffusion);

// Assigned head POI of the observing robot, or -1.
int observed_head(const env::Observation& obs);

Eigen::RowVectorXd local_features(const env::Observation& obs);

// Centralised state for the critics, ego robot first: time fraction, gamma to
// the horizon; per robot position, head-goal offset, has-head; per human
// position, velocity; per POI position, status one-hot, held-by-ego flag.
Eigen::RowVectorXd joint_state(const env::WorldState& world, int ego);
int joint_state_size(const ScenarioConfig& config);

}  // namespace hypersam::marl
