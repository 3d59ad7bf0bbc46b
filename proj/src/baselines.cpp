#include "hypersam/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "hypersam/errors.hpp"
#include "hypersam/orca.hpp"

namespace hypersam::baselines {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::RtaAstar: return "rta_astar";
    case PolicyKind::RtaOrca: return "rta_orca";
    case PolicyKind::RtaLearnedLa: return "rta_learned_la";
    case PolicyKind::MlpAblation: return "mlp_ablation";
    case PolicyKind::Hyper: return "hyper";
  }
  return "hyper";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  for (auto k : {PolicyKind::RtaAstar, PolicyKind::RtaOrca, PolicyKind::RtaLearnedLa, PolicyKind::MlpAblation,
                 PolicyKind::Hyper}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown policy kind '" + s + "'");
}

bool needs_checkpoint(PolicyKind kind) {
  return kind == PolicyKind::RtaLearnedLa || kind == PolicyKind::MlpAblation || kind == PolicyKind::Hyper;
}

std::vector<env::MacroAction> rta_allocate(std::span<const int> pois, int n_robots, std::mt19937_64& rng) {
  if (n_robots < 1) throw ConfigError("RTA needs at least one robot");
  std::vector<int> shuffled(pois.begin(), pois.end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<int> robots(n_robots);
  std::iota(robots.begin(), robots.end(), 0);
  std::shuffle(robots.begin(), robots.end(), rng);
  std::vector<env::MacroAction> plans(n_robots);
  for (std::size_t j = 0; j < shuffled.size(); ++j) {
    plans[robots[j % n_robots]].goal_sequence.push_back(shuffled[j]);
  }
  return plans;
}

GridMap::GridMap(int rows, int cols, double resolution, Vec2 origin)
    : rows_(rows), cols_(cols), resolution_(resolution), origin_(origin),
      occupancy_(static_cast<std::size_t>(std::max(rows, 0)) * std::max(cols, 0), 0) {
  if (rows < 1 || cols < 1) throw ConfigError("grid needs at least one cell");
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");
}

GridMap GridMap::from_text(const std::string& text, double resolution, Vec2 origin) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ConfigError("empty grid map");
  GridMap g(static_cast<int>(lines.size()), static_cast<int>(lines.front().size()), resolution, origin);
  for (int r = 0; r < g.rows(); ++r) {
    if (static_cast<int>(lines[r].size()) != g.cols()) throw ConfigError("ragged grid map");
    for (int c = 0; c < g.cols(); ++c) {
      const char ch = lines[r][c];
      if (ch != '.' && ch != '#') throw ConfigError(std::string("unexpected grid character '") + ch + "'");
      g.set_blocked({r, c}, ch == '#');
    }
  }
  return g;
}

Cell GridMap::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.y - origin_.y) / resolution_)),
          static_cast<int>(std::floor((p.x - origin_.x) / resolution_))};
}

Vec2 GridMap::center(Cell c) const {
  return {origin_.x + (c.col + 0.5) * resolution_, origin_.y + (c.row + 0.5) * resolution_};
}

void GridMap::block_disc(const Vec2& p, double radius) {
  const Cell lo = cell_of(p - Vec2{radius, radius});
  const Cell hi = cell_of(p + Vec2{radius, radius});
  for (int r = std::max(lo.row, 0); r <= std::min(hi.row, rows_ - 1); ++r) {
    for (int c = std::max(lo.col, 0); c <= std::min(hi.col, cols_ - 1); ++c) {
      if (distance(center({r, c}), p) <= radius) set_blocked({r, c});
    }
  }
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double octile(Cell a, Cell b) {
  const int dx = std::abs(a.col - b.col);
  const int dy = std::abs(a.row - b.row);
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

}  // namespace

std::vector<Cell> astar_plan(const GridMap& grid, Cell start, Cell goal) {
  if (!grid.in_bounds(start) || !grid.in_bounds(goal)) throw NoPath("start or goal outside the grid");
  if (grid.blocked(goal)) throw NoPath("goal cell is blocked");
  const std::size_t n = static_cast<std::size_t>(grid.rows()) * grid.cols();
  auto id = [&](Cell c) { return static_cast<std::size_t>(c.row) * grid.cols() + c.col; };
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, n);
  std::vector<unsigned char> closed(n, 0);

  // (f, h, insertion order) keeps expansion order deterministic.
  using Entry = std::tuple<double, double, std::uint64_t, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t counter = 0;
  g[id(start)] = 0.0;
  open.emplace(octile(start, goal), octile(start, goal), counter++, start.row, start.col);

  static constexpr int kDr[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
  static constexpr int kDc[8] = {0, 0, -1, 1, -1, 1, -1, 1};
  while (!open.empty()) {
    const auto [f, h, order, r, c] = open.top();
    open.pop();
    const Cell cur{r, c};
    const std::size_t ci = id(cur);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (cur == goal) {
      std::vector<Cell> path;
      for (std::size_t k = ci; k != n; k = parent[k]) {
        path.push_back({static_cast<int>(k / grid.cols()), static_cast<int>(k % grid.cols())});
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (int k = 0; k < 8; ++k) {
      const Cell nb{r + kDr[k], c + kDc[k]};
      if (!grid.in_bounds(nb) || grid.blocked(nb)) continue;
      const bool diagonal = k >= 4;
      if (diagonal && (grid.blocked({r + kDr[k], c}) || grid.blocked({r, c + kDc[k]}))) continue;
      const std::size_t ni = id(nb);
      if (closed[ni]) continue;
      const double ng = g[ci] + (diagonal ? kSqrt2 : 1.0);
      if (ng < g[ni]) {
        g[ni] = ng;
        parent[ni] = ci;
        const double nh = octile(nb, goal);
        open.emplace(ng + nh, nh, counter++, nb.row, nb.col);
      }
    }
  }
  throw NoPath("goal unreachable");
}

double path_cost(std::span<const Cell> path) {
  double cost = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const bool diagonal = path[i].row != path[i - 1].row && path[i].col != path[i - 1].col;
    cost += diagonal ? kSqrt2 : 1.0;
  }
  return cost;
}

namespace {

constexpr double kLookahead = 1.0;
constexpr double kGridMargin = 3.0;
constexpr double kStallDistance = 0.05;

struct AstarTracker {
  std::vector<Cell> path;
  GridMap grid;
  std::size_t index = 0;
  int head = -1;
  int planned_at = -1;
};

void replan(AstarTracker& tr, const env::WorldState& w, int i) {
  const ScenarioConfig& cfg = *w.config;
  const AgentState& self = w.robots[i];
  const Vec2 lo{std::min(self.position.x, self.goal.x) - kGridMargin, std::min(self.position.y, self.goal.y) - kGridMargin};
  const Vec2 hi{std::max(self.position.x, self.goal.x) + kGridMargin, std::max(self.position.y, self.goal.y) + kGridMargin};
  const double res = cfg.baseline.grid_resolution;
  tr.grid = GridMap(static_cast<int>(std::ceil((hi.y - lo.y) / res)), static_cast<int>(std::ceil((hi.x - lo.x) / res)), res, lo);
  for (const auto& h : w.humans) tr.grid.block_disc(h.position, self.radius + h.radius);
  for (std::size_t j = 0; j < w.robots.size(); ++j) {
    if (static_cast<int>(j) != i) tr.grid.block_disc(w.robots[j].position, self.radius + w.robots[j].radius);
  }
  tr.index = 0;
  tr.planned_at = w.step_index;
  try {
    tr.path = astar_plan(tr.grid, tr.grid.cell_of(self.position), tr.grid.cell_of(self.goal));
  } catch (const NoPath&) {
    tr.path.clear();
  }
}

Vec2 astar_velocity(AstarTracker& tr, const env::WorldState& w, int i) {
  const AgentState& self = w.robots[i];
  const int head = env::head_goal(w, i);
  if (head < 0) return {};
  if (head != tr.head || tr.planned_at < 0 || w.step_index - tr.planned_at >= w.config->baseline.replan_interval) {
    tr.head = head;
    replan(tr, w, i);
  }
  if (tr.path.empty()) return {};
  const Vec2 to_goal = self.goal - self.position;
  if (to_goal.norm() <= self.v_pref * w.dt) return to_goal / w.dt;
  // Advance along the path to the closest cell, then look ahead.
  double best = distance(tr.grid.center(tr.path[tr.index]), self.position);
  for (std::size_t k = tr.index + 1; k < tr.path.size(); ++k) {
    const double d = distance(tr.grid.center(tr.path[k]), self.position);
    if (d < best) {
      best = d;
      tr.index = k;
    }
  }
  Vec2 target = self.goal;
  for (std::size_t k = tr.index; k + 1 < tr.path.size(); ++k) {
    const Vec2 c = tr.grid.center(tr.path[k]);
    if (distance(c, self.position) >= kLookahead) {
      target = c;
      break;
    }
  }
  return normalized(target - self.position) * self.v_pref;
}

Vec2 orca_robot_velocity(const env::WorldState& w, int i) {
  std::vector<crowd::OrcaNeighbor> neighbors;
  for (std::size_t j = 0; j < w.robots.size(); ++j) {
    if (static_cast<int>(j) != i) neighbors.push_back({w.robots[j], true});
  }
  for (const auto& h : w.humans) neighbors.push_back({h, true});
  AgentState self = w.robots[i];
  if (env::head_goal(w, i) < 0) self.goal = self.position;
  return crowd::orca_velocity(self, neighbors, w.config->crowd.orca, w.dt);
}

// Moves the unvisited POIs of stalled robots to the others, round-robin.
bool redeal_stalled(env::WorldState& w, const std::vector<Vec2>& anchor) {
  const int n = static_cast<int>(w.robots.size());
  std::vector<int> stalled, active;
  for (int i = 0; i < n; ++i) {
    const bool has_goal = env::head_goal(w, i) >= 0;
    if (has_goal && distance(w.robots[i].position, anchor[i]) < kStallDistance) {
      stalled.push_back(i);
    } else {
      active.push_back(i);
    }
  }
  if (stalled.empty() || active.empty()) return false;
  std::vector<env::MacroAction> plans = w.plans;
  std::size_t k = 0;
  for (int s : stalled) {
    for (int poi : plans[s].goal_sequence) plans[active[k++ % active.size()]].goal_sequence.push_back(poi);
    plans[s].goal_sequence.clear();
  }
  env::apply_macro_actions(w, plans);
  return true;
}

void require_policy(PolicyKind kind, const marl::Policy* policy) {
  if (needs_checkpoint(kind) && !policy) {
    throw MissingCheckpoint("policy '" + to_string(kind) + "' needs a trained checkpoint");
  }
  if (policy && kind == PolicyKind::Hyper && policy->architecture() != marl::Architecture::Hyper) {
    throw ConfigError("hyper pipeline needs a hypergraph checkpoint");
  }
  if (policy && kind == PolicyKind::MlpAblation && policy->architecture() != marl::Architecture::MlpAblation) {
    throw ConfigError("mlp_ablation pipeline needs an MLP-ablation checkpoint");
  }
}

}  // namespace

EpisodeResult run_baseline(const ScenarioConfig& config, std::uint64_t seed, PolicyKind kind,
                           const marl::Policy* policy, const EpisodeOptions& options) {
  require_policy(kind, policy);
  nn::NoGradGuard guard;
  env::WorldState world = env::init_scenario(config, seed);
  const int n = static_cast<int>(world.robots.size());
  metrics::EpisodeTracker tracker(world);

  EpisodeResult result;
  io::EpisodeTrace& trace = result.trace;
  if (options.record_trace) {
    trace.config = to_json(config);
    trace.seed = seed;
    trace.policy = to_string(kind);
    trace.initial_robots = io::poses(world.robots);
    trace.initial_humans = io::poses(world.humans);
    for (const auto& p : world.pois) trace.pois.push_back(p.position());
  }

  const bool rta = kind == PolicyKind::RtaAstar || kind == PolicyKind::RtaOrca || kind == PolicyKind::RtaLearnedLa;
  std::mt19937_64 rta_rng(seed ^ 0x5851f42d4c957f2dULL);
  std::vector<marl::Encoding> enc(n);
  std::vector<AstarTracker> trackers(n);
  std::vector<Vec2> anchor(n);
  std::vector<env::LocalAction> actions(n);
  std::vector<double> rewards(n);

  while (!world.terminal) {
    io::StepRecord rec;
    if (env::advance_macro_clock(world, world.plans)) {
      const bool first = world.decision_steps.size() == 1;
      if (!rta) {
        marl::JointDecision jd = marl::decide_macro_actions(*policy, world, nullptr);
        std::vector<env::MacroAction> plans;
        for (auto& c : jd.choices) plans.push_back(c.action);
        env::apply_macro_actions(world, plans);
        enc = std::move(jd.encodings);
        rec.decision = true;
      } else if (first) {
        const std::vector<int> ids = env::unexplored_pois(world);
        auto plans = rta_allocate(ids, n, rta_rng);
        for (auto& p : plans) p.issued_at = 0;
        env::apply_macro_actions(world, plans);
        rec.decision = true;
      } else if (config.baseline.rta_reallocate && redeal_stalled(world, anchor)) {
        rec.decision = true;
      }
      if (rta) {
        for (int i = 0; i < n; ++i) anchor[i] = world.robots[i].position;
      }
      if (kind == PolicyKind::RtaLearnedLa) {
        for (int i = 0; i < n; ++i) {
          enc[i] = policy->encode(marl::scene_input(env::observe(world, i), policy->config().diffusion));
        }
      }
      if (rec.decision && options.record_trace) rec.plans = world.plans;
    }

    for (int i = 0; i < n; ++i) {
      Vec2 v;
      switch (kind) {
        case PolicyKind::RtaAstar: v = astar_velocity(trackers[i], world, i); break;
        case PolicyKind::RtaOrca: v = orca_robot_velocity(world, i); break;
        default: {
          const auto lf = marl::local_features(env::observe(world, i));
          v = marl::select_local_action(*policy, enc[i], lf, nullptr).velocity_command;
        }
      }
      actions[i].velocity_command = v;
    }

    const env::WorldState before = world;
    const auto events = env::step_in_place(world, actions);
    for (int i = 0; i < n; ++i) rewards[i] = env::compute_reward(before, world, i, events);
    tracker.record(before, world, rewards);

    if (options.record_trace) {
      rec.step_index = world.step_index;
      rec.t = world.t;
      for (const auto& a : actions) rec.actions.push_back(a.velocity_command);
      rec.robots = io::poses(world.robots);
      rec.humans = io::poses(world.humans);
      rec.events = events;
      rec.rewards = rewards;
      trace.steps.push_back(std::move(rec));
    }
  }
  result.report = tracker.finish(world);
  return result;
}

}  // namespace hypersam::baselines
