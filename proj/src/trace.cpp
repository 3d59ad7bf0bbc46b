#include "hypersam/trace.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include "hypersam/errors.hpp"

namespace hypersam::io {

using nlohmann::json;

std::vector<Pose> poses(const std::vector<AgentState>& agents) {
  std::vector<Pose> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back({a.position, a.velocity});
  return out;
}

namespace {

json pose_list(const std::vector<Pose>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back({p.position.x, p.position.y, p.velocity.x, p.velocity.y});
  return a;
}

std::vector<Pose> parse_poses(const json& a) {
  std::vector<Pose> out;
  for (const auto& p : a) {
    const auto v = p.get<std::vector<double>>();
    if (v.size() != 4) throw CorruptTrace("pose needs four numbers");
    out.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  return out;
}

json vec_list(const std::vector<Vec2>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back({v.x, v.y});
  return a;
}

std::vector<Vec2> parse_vecs(const json& a) {
  std::vector<Vec2> out;
  for (const auto& p : a) {
    const auto v = p.get<std::vector<double>>();
    if (v.size() != 2) throw CorruptTrace("vector needs two numbers");
    out.push_back({v[0], v[1]});
  }
  return out;
}

json event_json(const env::Event& e) {
  return {{"kind", env::to_string(e.kind)}, {"step", e.step_index}, {"robot", e.robot_id}, {"other", e.other_id}};
}

env::Event parse_event(const json& j) {
  return {env::event_kind_from_string(j.at("kind").get<std::string>()), j.at("step").get<int>(),
          j.at("robot").get<int>(), j.at("other").get<int>()};
}

}  // namespace

void write_trace(const EpisodeTrace& trace, std::ostream& out) {
  out << kTraceMagic << '\n';
  json meta = {{"type", "meta"},
               {"seed", trace.seed},
               {"policy", trace.policy},
               {"config", trace.config},
               {"robots", pose_list(trace.initial_robots)},
               {"humans", pose_list(trace.initial_humans)},
               {"pois", vec_list(trace.pois)}};
  out << meta.dump() << '\n';
  for (const auto& s : trace.steps) {
    json j = {{"type", "step"}, {"step", s.step_index}, {"t", s.t}, {"decision", s.decision}};
    if (s.decision) {
      json plans = json::array();
      for (const auto& p : s.plans) plans.push_back(p.goal_sequence);
      j["plans"] = plans;
    }
    j["actions"] = vec_list(s.actions);
    j["robots"] = pose_list(s.robots);
    j["humans"] = pose_list(s.humans);
    json events = json::array();
    for (const auto& e : s.events) events.push_back(event_json(e));
    j["events"] = events;
    j["rewards"] = s.rewards;
    out << j.dump() << '\n';
  }
  out << json{{"type", "end"}, {"steps", trace.steps.size()}, {"summary", trace.summary}}.dump() << '\n';
}

void write_trace(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace " + path.string());
  write_trace(trace, out);
}

EpisodeTrace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceMagic) throw CorruptTrace("missing trace header");
  EpisodeTrace trace;
  bool have_meta = false, have_end = false;
  int line_no = 1;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (have_end) throw CorruptTrace("content after end record");
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "meta") {
        if (have_meta) throw CorruptTrace("duplicate metadata record");
        trace.seed = j.at("seed").get<std::uint64_t>();
        trace.policy = j.at("policy").get<std::string>();
        trace.config = j.at("config");
        trace.initial_robots = parse_poses(j.at("robots"));
        trace.initial_humans = parse_poses(j.at("humans"));
        trace.pois = parse_vecs(j.at("pois"));
        have_meta = true;
      } else if (type == "step") {
        if (!have_meta) throw CorruptTrace("step before metadata");
        StepRecord s;
        s.step_index = j.at("step").get<int>();
        s.t = j.at("t").get<double>();
        s.decision = j.at("decision").get<bool>();
        if (s.decision) {
          for (const auto& p : j.at("plans")) s.plans.push_back({p.get<std::vector<int>>(), 0});
        }
        s.actions = parse_vecs(j.at("actions"));
        s.robots = parse_poses(j.at("robots"));
        s.humans = parse_poses(j.at("humans"));
        for (const auto& e : j.at("events")) s.events.push_back(parse_event(e));
        s.rewards = j.at("rewards").get<std::vector<double>>();
        trace.steps.push_back(std::move(s));
      } else if (type == "end") {
        if (!have_meta) throw CorruptTrace("end before metadata");
        if (j.at("steps").get<std::size_t>() != trace.steps.size()) throw CorruptTrace("step count mismatch");
        trace.summary = j.value("summary", json::object());
        have_end = true;
      } else {
        throw CorruptTrace("unknown record type '" + type + "'");
      }
    }
  } catch (const CorruptTrace&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptTrace("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_end) throw CorruptTrace("trace is truncated (no end record)");
  return trace;
}

EpisodeTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorruptTrace("cannot open trace " + path.string());
  return read_trace(in);
}

namespace {

double max_pose_deviation(const std::vector<Pose>& recorded, const std::vector<AgentState>& actual) {
  if (recorded.size() != actual.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    worst = std::max(worst, distance(recorded[i].position, actual[i].position));
    worst = std::max(worst, distance(recorded[i].velocity, actual[i].velocity));
  }
  return worst;
}

}  // namespace

ReplayCheck verify_replay(const EpisodeTrace& trace, double tolerance) {
  ReplayCheck check;
  auto fail = [&](const std::string& msg) {
    check.consistent = false;
    if (check.message.empty()) check.message = msg;
  };
  env::WorldState world = env::init_scenario(config_from_json(trace.config), trace.seed);
  check.max_deviation = std::max(max_pose_deviation(trace.initial_robots, world.robots),
                                 max_pose_deviation(trace.initial_humans, world.humans));
  if (check.max_deviation > tolerance) fail("initial poses differ");

  for (const auto& s : trace.steps) {
    if (world.terminal) {
      fail("trace continues after a terminal step");
      break;
    }
    if (s.decision) env::apply_macro_actions(world, s.plans);
    std::vector<env::LocalAction> actions;
    for (const auto& a : s.actions) actions.push_back({a});
    const auto events = env::step_in_place(world, actions);
    const double dev = std::max(max_pose_deviation(s.robots, world.robots), max_pose_deviation(s.humans, world.humans));
    check.max_deviation = std::max(check.max_deviation, dev);
    if (dev > tolerance) fail("poses diverge at step " + std::to_string(s.step_index));
    if (events != s.events) fail("events differ at step " + std::to_string(s.step_index));
    if (world.step_index != s.step_index) fail("step index mismatch at step " + std::to_string(s.step_index));
  }
  if (!trace.steps.empty() && !world.terminal) fail("re-simulated episode did not terminate");
  return check;
}

void write_pose_csv(const EpisodeTrace& trace, std::ostream& out) {
  out << "step,t";
  for (std::size_t i = 0; i < trace.initial_robots.size(); ++i) out << ",r" << i << "_x,r" << i << "_y";
  for (std::size_t i = 0; i < trace.initial_humans.size(); ++i) out << ",h" << i << "_x,h" << i << "_y";
  out << '\n' << std::setprecision(12);
  auto row = [&](int step, double t, const std::vector<Pose>& robots, const std::vector<Pose>& humans) {
    out << step << ',' << t;
    for (const auto& p : robots) out << ',' << p.position.x << ',' << p.position.y;
    for (const auto& p : humans) out << ',' << p.position.x << ',' << p.position.y;
    out << '\n';
  };
  row(0, 0.0, trace.initial_robots, trace.initial_humans);
  for (const auto& s : trace.steps) row(s.step_index, s.t, s.robots, s.humans);
}

}  // namespace hypersam::io
