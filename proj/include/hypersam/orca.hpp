#pragma once

#include <random>
#include <span>
#include <vector>

#include "hypersam/agent.hpp"
#include "hypersam/config.hpp"

namespace hypersam::crowd {

// Velocity-space constraint: v is permitted iff dot(v - point, normal) >= 0.
struct HalfPlane {
  Vec2 point;
  Vec2 normal;
};

struct OrcaNeighbor {
  AgentState state;
  // false for agents that will not yield; self then takes full responsibility.
  bool reciprocal = true;
};

// Velocity toward the goal at v_pref, shortened when the goal is within one step.
Vec2 preferred_velocity(const AgentState& self, double dt);

// ORCA half-planes induced on `self` by the nearest max_neighbors agents
// within neighbor_dist.
std::vector<HalfPlane> orca_half_planes(const AgentState& self,
                                        std::span<const OrcaNeighbor> neighbors,
                                        const OrcaParams& params, double dt);

// New velocity closest to the preferred one subject to all ORCA half-planes
// and |v| <= v_pref; least-violating velocity when the constraints are infeasible.
Vec2 orca_velocity(const AgentState& self, std::span<const OrcaNeighbor> neighbors,
                   const OrcaParams& params, double dt);

// Convenience overload: every neighbor is reciprocal.
Vec2 orca_velocity(const AgentState& self, std::span<const AgentState> neighbors,
                   const OrcaParams& params, double dt);

// Solves the ORCA program for an arbitrary preferred velocity.
Vec2 solve_orca_program(std::span<const HalfPlane> planes, const Vec2& preferred, double max_speed);

// Re-samples a pedestrian's goal and preferred speed. Forced when the human has
// reached its goal, otherwise with probability crowd.p_resample.
AgentState resample_human_goal(const AgentState& human, std::mt19937_64& rng,
                               const ScenarioConfig& config);

}  // namespace hypersam::crowd
