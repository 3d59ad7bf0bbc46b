#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hypersam/agent.hpp"
#include "hypersam/config.hpp"

namespace hypersam::env {

enum class PoiStatus { Unexplored, Assigned, Explored };

// A task location. Status moves Unexplored -> Assigned -> Explored, or back from
// Assigned to Unexplored on re-allocation. Explored is terminal.
class PoiState {
 public:
  PoiState() = default;
  explicit PoiState(Vec2 position) : position_(position) {}

  const Vec2& position() const { return position_; }
  PoiStatus status() const { return status_; }
  // Robot holding the POI while Assigned, or the robot that explored it.
  int robot() const { return robot_; }

  void assign(int robot_id);
  void release();
  void explore(int robot_id);

  bool operator==(const PoiState&) const = default;

 private:
  Vec2 position_;
  PoiStatus status_ = PoiStatus::Unexplored;
  int robot_ = -1;
};

enum class EventKind { RobotRobotCollision, RobotHumanCollision, Arrival, Timeout, AllPoisExplored };

// robot_id/other_id: colliding pair (robot, robot|human) or (robot, poi) for arrivals.
struct Event {
  EventKind kind;
  int step_index = 0;
  int robot_id = -1;
  int other_id = -1;

  bool operator==(const Event&) const = default;
};

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

// Ordered POI goals for one robot; an empty sequence means no task remains.
struct MacroAction {
  std::vector<int> goal_sequence;
  int issued_at = 0;

  bool empty() const { return goal_sequence.empty(); }
  bool operator==(const MacroAction&) const = default;
};

struct LocalAction {
  Vec2 velocity_command;
};

struct PoiView {
  Vec2 position;
  PoiStatus status = PoiStatus::Unexplored;
  int robot = -1;
};

struct ObservationFrame {
  AgentState self_state;
  // Other robots first (n_other_robots of them), then humans.
  std::vector<ObservedState> others;
  std::vector<PoiView> poi_view;
};

struct Observation {
  int robot_id = 0;
  int n_other_robots = 0;
  AgentState self_state;
  std::vector<ObservedState> others;
  std::vector<PoiView> poi_view;
  // Oldest first; the last frame is the current one.
  std::vector<ObservationFrame> history;
};

// Public state recorded each step so observations can carry a short history.
struct Snapshot {
  std::vector<AgentState> robots;
  std::vector<AgentState> humans;
  std::vector<PoiState> pois;
};

struct WorldState {
  std::shared_ptr<const ScenarioConfig> config;
  std::uint64_t seed = 0;
  std::vector<AgentState> robots;
  std::vector<AgentState> humans;
  std::vector<PoiState> pois;
  double t = 0.0;
  int step_index = 0;
  double dt = 0.25;
  std::vector<Event> events;
  std::vector<MacroAction> plans;
  std::vector<int> decision_steps;
  std::deque<Snapshot> history;
  std::mt19937_64 rng;
  bool terminal = false;
};

struct StepResult {
  WorldState world;
  std::vector<Event> events;
};

WorldState init_scenario(const ScenarioConfig& config, std::uint64_t seed);

Observation observe(const WorldState& world, int robot_id);

// Advances robots by their commanded velocities (clamped to v_pref) and humans
// by ORCA, resolves arrivals, then appends the condition events.
std::vector<Event> step_in_place(WorldState& world, std::span<const LocalAction> joint_actions);
StepResult step_world(const WorldState& world, std::span<const LocalAction> joint_actions);

std::vector<Event> check_conditions(const WorldState& world);

enum class RewardBranch { AllArrived, Arrival, Collision, Timeout, Proximity, Progress };

struct RewardTerm {
  RewardBranch branch;
  double value;
};

// First matching branch of the piecewise per-robot reward.
RewardTerm classify_reward(const WorldState& before, const WorldState& after, int robot_id,
                           std::span<const Event> events);
double compute_reward(const WorldState& before, const WorldState& after, int robot_id,
                      std::span<const Event> events);

// True iff a new decision timestep t_k starts at the current step; records it.
bool advance_macro_clock(WorldState& world, std::span<const MacroAction> macro_actions);

// Installs one macro action per robot: releases old assignments, marks each head Assigned.
void apply_macro_actions(WorldState& world, std::span<const MacroAction> macro_actions);

// Surface gap (center distance minus radii) to the nearest human; +inf with no humans.
double nearest_human_gap(const WorldState& world, int robot_id);

// Head POI of the robot's current plan, or -1.
int head_goal(const WorldState& world, int robot_id);

std::vector<int> unexplored_pois(const WorldState& world);
int explored_count(const WorldState& world);
bool all_explored(const WorldState& world);

}  // namespace hypersam::env
