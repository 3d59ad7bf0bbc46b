#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypersam/env.hpp"

namespace hypersam::io {

inline constexpr const char* kTraceMagic = "#HYPERSAM-TRACE v1";

struct Pose {
  Vec2 position;
  Vec2 velocity;
};

struct StepRecord {
  int step_index = 0;
  double t = 0.0;
  // Plans installed right before this step; empty when no decision happened.
  std::vector<env::MacroAction> plans;
  bool decision = false;
  std::vector<Vec2> actions;  // commanded robot velocities
  std::vector<Pose> robots;   // after the step
  std::vector<Pose> humans;
  std::vector<env::Event> events;
  std::vector<double> rewards;
};

struct EpisodeTrace {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string policy;
  std::vector<Pose> initial_robots;
  std::vector<Pose> initial_humans;
  std::vector<Vec2> pois;
  std::vector<StepRecord> steps;
  nlohmann::json summary = nlohmann::json::object();
};

std::vector<Pose> poses(const std::vector<AgentState>& agents);

// Magic header line, a metadata line, one line per step, then an end line.
void write_trace(const EpisodeTrace& trace, std::ostream& out);
void write_trace(const EpisodeTrace& trace, const std::filesystem::path& path);
// Throws CorruptTrace on a bad header, malformed line or missing end line.
EpisodeTrace read_trace(std::istream& in);
EpisodeTrace read_trace(const std::filesystem::path& path);

struct ReplayCheck {
  bool consistent = true;
  double max_deviation = 0.0;
  std::string message;
};

// Re-simulates the episode from its seed with the recorded plans and actions
// and compares poses and events against the record.
ReplayCheck verify_replay(const EpisodeTrace& trace, double tolerance = 1e-9);

// step,t,r0_x,r0_y,...,h0_x,h0_y,... with one row for the initial state and one per step.
void write_pose_csv(const EpisodeTrace& trace, std::ostream& out);

}  // namespace hypersam::io
