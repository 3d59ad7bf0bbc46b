#pragma once

#include "hypersam/geometry.hpp"

namespace hypersam {

// Which controller drives an agent. Part of the agent's private state.
enum class PolicyTag { Learned, Orca, AStar, Idle };

// Full agent state: observable part (position, velocity, radius) plus the
// private part (goal, preferred speed, controller tag).
struct AgentState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  Vec2 goal;
  double v_pref = 1.0;
  PolicyTag policy_tag = PolicyTag::Idle;

  bool operator==(const AgentState&) const = default;
};

// Public five-component view [p_x, p_y, v_x, v_y, radius] of another agent.
struct ObservedState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.0;

  bool operator==(const ObservedState&) const = default;
};

inline ObservedState observed(const AgentState& a) { return {a.position, a.velocity, a.radius}; }

}  // namespace hypersam
