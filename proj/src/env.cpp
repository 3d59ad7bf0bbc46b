#include "hypersam/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hypersam/errors.hpp"
#include "hypersam/orca.hpp"

namespace hypersam::env {

void PoiState::assign(int robot_id) {
  if (status_ == PoiStatus::Explored) throw std::logic_error("cannot assign an explored POI");
  status_ = PoiStatus::Assigned;
  robot_ = robot_id;
}

void PoiState::release() {
  if (status_ != PoiStatus::Assigned) return;
  status_ = PoiStatus::Unexplored;
  robot_ = -1;
}

void PoiState::explore(int robot_id) {
  if (status_ != PoiStatus::Assigned || robot_ != robot_id) {
    throw std::logic_error("only the assigned robot can explore a POI");
  }
  status_ = PoiStatus::Explored;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::RobotRobotCollision: return "robot_robot_collision";
    case EventKind::RobotHumanCollision: return "robot_human_collision";
    case EventKind::Arrival: return "arrival";
    case EventKind::Timeout: return "timeout";
    case EventKind::AllPoisExplored: return "all_pois_explored";
  }
  return "unknown";
}

EventKind event_kind_from_string(const std::string& s) {
  for (auto k : {EventKind::RobotRobotCollision, EventKind::RobotHumanCollision,
                 EventKind::Arrival, EventKind::Timeout, EventKind::AllPoisExplored}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

namespace {

constexpr int kPlacementRetries = 1000;

Snapshot snapshot(const WorldState& w) { return {w.robots, w.humans, w.pois}; }

void push_history(WorldState& w) {
  w.history.push_back(snapshot(w));
  while (w.history.size() > static_cast<std::size_t>(w.config->history_window)) {
    w.history.pop_front();
  }
}

Vec2 on_circle(double radius, double theta) {
  return {radius * std::cos(theta), radius * std::sin(theta)};
}

bool clear_of(const Vec2& p, double radius, const std::vector<AgentState>& agents, double margin) {
  return std::all_of(agents.begin(), agents.end(), [&](const AgentState& a) {
    return distance(p, a.position) > radius + a.radius + margin;
  });
}

void check_robot(const WorldState& w, int robot_id) {
  if (robot_id < 0 || robot_id >= static_cast<int>(w.robots.size())) {
    throw UnknownAgent("unknown robot id " + std::to_string(robot_id));
  }
}

// Moves the robot's plan past finished entries and marks the new head Assigned.
void refresh_head(WorldState& w, int robot_id) {
  auto& seq = w.plans[robot_id].goal_sequence;
  while (!seq.empty()) {
    const PoiState& poi = w.pois[seq.front()];
    const bool taken_by_other = poi.status() == PoiStatus::Assigned && poi.robot() != robot_id;
    if (poi.status() != PoiStatus::Explored && !taken_by_other) break;
    seq.erase(seq.begin());
  }
  AgentState& robot = w.robots[robot_id];
  if (seq.empty()) {
    robot.goal = robot.position;
  } else {
    w.pois[seq.front()].assign(robot_id);
    robot.goal = w.pois[seq.front()].position();
  }
}

ObservationFrame frame_from(const Snapshot& s, int robot_id) {
  ObservationFrame f;
  f.self_state = s.robots[robot_id];
  for (std::size_t j = 0; j < s.robots.size(); ++j) {
    if (static_cast<int>(j) != robot_id) f.others.push_back(observed(s.robots[j]));
  }
  for (const auto& h : s.humans) f.others.push_back(observed(h));
  for (const auto& p : s.pois) f.poi_view.push_back({p.position(), p.status(), p.robot()});
  return f;
}

}  // namespace

WorldState init_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  validate(config);
  WorldState w;
  w.config = std::make_shared<const ScenarioConfig>(config);
  w.seed = seed;
  w.dt = config.dt;
  w.rng.seed(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double margin = config.discomfort_distance;

  for (int i = 0; i < config.n_robots; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      const Vec2 p = on_circle(config.spawn_radius, angle(w.rng));
      if (clear_of(p, config.robot_radius, w.robots, margin)) {
        AgentState r;
        r.position = p;
        r.goal = p;
        r.radius = config.robot_radius;
        r.v_pref = config.robot_v_pref;
        r.policy_tag = PolicyTag::Learned;
        w.robots.push_back(r);
        placed = true;
      }
    }
    if (!placed) throw ConfigError("cannot place robots without overlap");
  }

  for (int i = 0; i < config.n_humans; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      const Vec2 p = on_circle(config.human_activity_radius, angle(w.rng));
      const Vec2 goal = -p + Vec2{jitter(w.rng), jitter(w.rng)};
      if (clear_of(p, config.human_radius, w.robots, margin) &&
          clear_of(p, config.human_radius, w.humans, margin)) {
        AgentState h;
        h.position = p;
        h.goal = goal;
        h.radius = config.human_radius;
        h.v_pref = config.human_v_pref;
        h.policy_tag = PolicyTag::Orca;
        w.humans.push_back(h);
        placed = true;
      }
    }
    if (!placed) throw ConfigError("cannot place humans without overlap");
  }

  for (int i = 0; i < config.n_pois; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      const Vec2 p = on_circle(config.poi_circle_radius, angle(w.rng));
      const bool spaced = std::all_of(w.pois.begin(), w.pois.end(), [&](const PoiState& q) {
        return distance(p, q.position()) > 2.0 * config.robot_radius;
      });
      if (spaced) {
        w.pois.emplace_back(p);
        placed = true;
      }
    }
    if (!placed) throw ConfigError("cannot place POIs without overlap");
  }

  w.plans.assign(w.robots.size(), MacroAction{});
  push_history(w);
  return w;
}

Observation observe(const WorldState& world, int robot_id) {
  check_robot(world, robot_id);
  Observation o;
  o.robot_id = robot_id;
  o.n_other_robots = static_cast<int>(world.robots.size()) - 1;
  ObservationFrame current = frame_from(snapshot(world), robot_id);
  o.self_state = current.self_state;
  o.others = current.others;
  o.poi_view = current.poi_view;
  for (const auto& s : world.history) o.history.push_back(frame_from(s, robot_id));
  if (o.history.empty()) o.history.push_back(std::move(current));
  return o;
}

std::vector<Event> check_conditions(const WorldState& w) {
  std::vector<Event> events;
  const int n = static_cast<int>(w.robots.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (distance(w.robots[i].position, w.robots[j].position) <=
          w.robots[i].radius + w.robots[j].radius) {
        events.push_back({EventKind::RobotRobotCollision, w.step_index, i, j});
      }
    }
    for (int h = 0; h < static_cast<int>(w.humans.size()); ++h) {
      if (distance(w.robots[i].position, w.humans[h].position) <=
          w.robots[i].radius + w.humans[h].radius) {
        events.push_back({EventKind::RobotHumanCollision, w.step_index, i, h});
      }
    }
  }
  const bool done = all_explored(w);
  if (w.step_index >= w.config->max_steps && !done) {
    events.push_back({EventKind::Timeout, w.step_index, -1, -1});
  }
  if (done) events.push_back({EventKind::AllPoisExplored, w.step_index, -1, -1});
  return events;
}

std::vector<Event> step_in_place(WorldState& w, std::span<const LocalAction> joint_actions) {
  if (joint_actions.size() != w.robots.size()) {
    throw DimensionMismatch("expected " + std::to_string(w.robots.size()) + " local actions, got " +
                            std::to_string(joint_actions.size()));
  }
  if (w.terminal) throw std::logic_error("step_world called on a terminal world");
  const ScenarioConfig& cfg = *w.config;

  // Humans: reciprocal among themselves, robots treated as non-yielding.
  std::vector<Vec2> human_velocity(w.humans.size());
  std::vector<crowd::OrcaNeighbor> neighbors;
  for (std::size_t h = 0; h < w.humans.size(); ++h) {
    neighbors.clear();
    for (std::size_t o = 0; o < w.humans.size(); ++o) {
      if (o != h) neighbors.push_back({w.humans[o], true});
    }
    for (const auto& r : w.robots) neighbors.push_back({r, false});
    human_velocity[h] = crowd::orca_velocity(w.humans[h], neighbors, cfg.crowd.orca, w.dt);
  }

  for (std::size_t i = 0; i < w.robots.size(); ++i) {
    AgentState& r = w.robots[i];
    r.velocity = clamp_norm(joint_actions[i].velocity_command, r.v_pref);
    r.position += r.velocity * w.dt;
  }
  for (std::size_t h = 0; h < w.humans.size(); ++h) {
    AgentState& hu = w.humans[h];
    hu.velocity = human_velocity[h];
    hu.position += hu.velocity * w.dt;
    hu = crowd::resample_human_goal(hu, w.rng, cfg);
  }

  w.step_index += 1;
  w.t = w.step_index * w.dt;

  std::vector<Event> events;
  for (int i = 0; i < static_cast<int>(w.robots.size()); ++i) {
    const int head = head_goal(w, i);
    if (head < 0) continue;
    if (distance(w.robots[i].position, w.pois[head].position()) < w.robots[i].radius) {
      w.pois[head].explore(i);
      events.push_back({EventKind::Arrival, w.step_index, i, head});
      refresh_head(w, i);
    }
  }
  // The goal field follows the head even if another robot's arrival changed it.
  for (int i = 0; i < static_cast<int>(w.robots.size()); ++i) {
    const int head = head_goal(w, i);
    w.robots[i].goal = head >= 0 ? w.pois[head].position() : w.robots[i].position;
  }

  for (const auto& e : check_conditions(w)) events.push_back(e);
  for (const auto& e : events) {
    if (e.kind != EventKind::Arrival) w.terminal = true;
    w.events.push_back(e);
  }
  push_history(w);
  return events;
}

StepResult step_world(const WorldState& world, std::span<const LocalAction> joint_actions) {
  StepResult r{world, {}};
  r.events = step_in_place(r.world, joint_actions);
  return r;
}

double nearest_human_gap(const WorldState& w, int robot_id) {
  check_robot(w, robot_id);
  double best = std::numeric_limits<double>::infinity();
  const AgentState& r = w.robots[robot_id];
  for (const auto& h : w.humans) {
    best = std::min(best, distance(r.position, h.position) - r.radius - h.radius);
  }
  return best;
}

int head_goal(const WorldState& w, int robot_id) {
  const auto& seq = w.plans[robot_id].goal_sequence;
  return seq.empty() ? -1 : seq.front();
}

RewardTerm classify_reward(const WorldState& before, const WorldState& after, int robot_id,
                           std::span<const Event> events) {
  check_robot(after, robot_id);
  auto any = [&](auto pred) { return std::any_of(events.begin(), events.end(), pred); };

  if (any([](const Event& e) { return e.kind == EventKind::AllPoisExplored; })) {
    return {RewardBranch::AllArrived, 100.0};
  }
  if (any([&](const Event& e) { return e.kind == EventKind::Arrival && e.robot_id == robot_id; })) {
    return {RewardBranch::Arrival, 25.0};
  }
  if (any([&](const Event& e) {
        return (e.kind == EventKind::RobotHumanCollision && e.robot_id == robot_id) ||
               (e.kind == EventKind::RobotRobotCollision &&
                (e.robot_id == robot_id || e.other_id == robot_id));
      })) {
    return {RewardBranch::Collision, -100.0};
  }
  if (any([](const Event& e) { return e.kind == EventKind::Timeout; })) {
    return {RewardBranch::Timeout, -100.0};
  }
  const double gap = nearest_human_gap(after, robot_id);
  if (gap <= after.config->discomfort_distance) {
    return {RewardBranch::Proximity, gap > 0.0 ? std::max(-1.0 / gap, -5.0) : -5.0};
  }
  double progress = 0.0;
  const int head = head_goal(before, robot_id);
  if (head >= 0) {
    const Vec2 goal = before.pois[head].position();
    progress = distance(before.robots[robot_id].position, goal) -
               distance(after.robots[robot_id].position, goal);
  }
  constexpr double kTimePenaltyRate = 0.15;
  return {RewardBranch::Progress, 0.5 * progress - kTimePenaltyRate * after.dt};
}

double compute_reward(const WorldState& before, const WorldState& after, int robot_id,
                      std::span<const Event> events) {
  return classify_reward(before, after, robot_id, events).value;
}

bool advance_macro_clock(WorldState& w, std::span<const MacroAction> macro_actions) {
  if (macro_actions.size() != w.robots.size()) {
    throw DimensionMismatch("expected one macro action per robot");
  }
  if (w.terminal) return false;
  bool decide = w.decision_steps.empty();
  if (!decide) {
    decide = w.step_index - w.decision_steps.back() >= w.config->macro_interval;
  }
  if (!decide) {
    decide = std::any_of(w.events.rbegin(), w.events.rend(), [&](const Event& e) {
      return e.step_index == w.step_index && e.kind == EventKind::Arrival;
    });
  }
  if (!decide) {
    const bool free_poi = std::any_of(w.pois.begin(), w.pois.end(), [](const PoiState& p) {
      return p.status() == PoiStatus::Unexplored;
    });
    decide = free_poi && std::any_of(macro_actions.begin(), macro_actions.end(),
                                     [](const MacroAction& m) { return m.empty(); });
  }
  if (decide && (w.decision_steps.empty() || w.decision_steps.back() < w.step_index)) {
    w.decision_steps.push_back(w.step_index);
  }
  return decide;
}

void apply_macro_actions(WorldState& w, std::span<const MacroAction> macro_actions) {
  if (macro_actions.size() != w.robots.size()) {
    throw DimensionMismatch("expected one macro action per robot");
  }
  const int n_pois = static_cast<int>(w.pois.size());
  std::vector<int> heads;
  for (const auto& m : macro_actions) {
    std::vector<int> seen;
    for (int id : m.goal_sequence) {
      if (id < 0 || id >= n_pois) throw InvalidMacroAction("POI id out of range");
      if (std::find(seen.begin(), seen.end(), id) != seen.end()) {
        throw InvalidMacroAction("duplicate POI in goal sequence");
      }
      if (w.pois[id].status() == PoiStatus::Explored) {
        throw InvalidMacroAction("goal sequence contains an explored POI");
      }
      seen.push_back(id);
    }
    if (!m.empty()) {
      if (std::find(heads.begin(), heads.end(), m.goal_sequence.front()) != heads.end()) {
        throw InvalidMacroAction("two robots share the same head goal");
      }
      heads.push_back(m.goal_sequence.front());
    }
  }
  for (auto& p : w.pois) p.release();
  for (std::size_t i = 0; i < macro_actions.size(); ++i) w.plans[i] = macro_actions[i];
  for (int i = 0; i < static_cast<int>(w.robots.size()); ++i) refresh_head(w, i);
}

std::vector<int> unexplored_pois(const WorldState& w) {
  std::vector<int> ids;
  for (int i = 0; i < static_cast<int>(w.pois.size()); ++i) {
    if (w.pois[i].status() != PoiStatus::Explored) ids.push_back(i);
  }
  return ids;
}

int explored_count(const WorldState& w) {
  return static_cast<int>(std::count_if(w.pois.begin(), w.pois.end(), [](const PoiState& p) {
    return p.status() == PoiStatus::Explored;
  }));
}

bool all_explored(const WorldState& w) { return explored_count(w) == static_cast<int>(w.pois.size()); }

}  // namespace hypersam::env
