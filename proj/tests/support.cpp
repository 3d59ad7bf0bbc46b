#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <queue>

#include "hypersam/orca.hpp"

namespace testsupport {

using namespace hypersam;
using env::Event;
using env::EventKind;

env::WorldState make_world(const std::vector<Vec2>& robots, const std::vector<Vec2>& humans,
                           const std::vector<Vec2>& pois, const std::vector<int>& heads, int step_index, double dt) {
  auto config = std::make_shared<ScenarioConfig>();
  config->n_robots = static_cast<int>(robots.size());
  config->n_humans = static_cast<int>(humans.size());
  config->n_pois = static_cast<int>(pois.size());
  config->dt = dt;
  env::WorldState w;
  w.config = config;
  w.dt = dt;
  w.step_index = step_index;
  w.t = step_index * dt;
  for (const Vec2& p : robots) {
    AgentState a;
    a.position = p;
    a.radius = 0.3;
    a.v_pref = 1.0;
    w.robots.push_back(a);
  }
  for (const Vec2& p : humans) {
    AgentState a;
    a.position = p;
    a.radius = 0.3;
    a.v_pref = 1.0;
    w.humans.push_back(a);
  }
  for (const Vec2& p : pois) w.pois.emplace_back(p);
  w.plans.resize(robots.size());
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i] >= 0) {
      w.plans[i].goal_sequence = {heads[i]};
      w.pois[heads[i]].assign(static_cast<int>(i));
    }
  }
  return w;
}

namespace {

RewardCase make_case(std::string name, const std::vector<Vec2>& robots_before, const std::vector<Vec2>& robots_after,
                     const std::vector<Vec2>& humans, std::vector<Event> events, double expected, int robot = 0,
                     double dt = 0.25, std::vector<int> heads = {0, 1}) {
  const std::vector<Vec2> pois = {{10.0, 0.0}, {-10.0, 0.0}, {0.0, 10.0}};
  heads.resize(robots_before.size(), -1);
  RewardCase c;
  c.name = std::move(name);
  c.before = make_world(robots_before, humans, pois, heads, 10, dt);
  c.after = make_world(robots_after, humans, pois, heads, 11, dt);
  c.robot = robot;
  c.events = std::move(events);
  c.expected = expected;
  return c;
}

}  // namespace

std::vector<RewardCase> reward_cases() {
  const Vec2 r0{0.0, 0.0};
  const Vec2 r1{0.0, -5.0};
  const Vec2 far_human{0.0, 5.0};
  const Event all{EventKind::AllPoisExplored, 11, -1, -1};
  const Event arrive0{EventKind::Arrival, 11, 0, 0};
  const Event arrive1{EventKind::Arrival, 11, 1, 1};
  const Event hit_human0{EventKind::RobotHumanCollision, 11, 0, 0};
  const Event hit_robot01{EventKind::RobotRobotCollision, 11, 0, 1};
  const Event hit_human1{EventKind::RobotHumanCollision, 11, 1, 0};
  const Event timeout{EventKind::Timeout, 11, -1, -1};
  // Robot 0 heads for (10, 0); moving +x by d lowers its goal distance by d.
  const Vec2 step04{0.4, 0.0};
  const Vec2 back025{-0.25, 0.0};
  // Human centres giving surface gaps of 0.2, 0.4, 0.45, 0.1 and 0.46 to a robot at the origin.
  const Vec2 gap02{0.0, 0.8}, gap04{0.0, 1.0}, gap045{0.0, 1.05}, gap01{0.0, 0.7}, gap046{0.0, 1.06};

  std::vector<RewardCase> cases;
  cases.push_back(make_case("all explored", {r0, r1}, {r0, r1}, {far_human}, {all}, 100.0));
  cases.push_back(make_case("all explored beats own arrival", {r0, r1}, {r0, r1}, {far_human}, {arrive0, all}, 100.0));
  cases.push_back(make_case("all explored beats collision", {r0, r1}, {r0, r1}, {far_human}, {hit_human0, all}, 100.0));
  cases.push_back(make_case("own arrival", {r0, r1}, {r0, r1}, {far_human}, {arrive0}, 25.0));
  cases.push_back(make_case("own arrival beats collision", {r0, r1}, {r0, r1}, {far_human}, {arrive0, hit_human0}, 25.0));
  cases.push_back(make_case("own arrival beats timeout", {r0, r1}, {r0, r1}, {far_human}, {arrive0, timeout}, 25.0));
  cases.push_back(make_case("own arrival beats proximity", {r0, r1}, {r0, r1}, {gap02}, {arrive0}, 25.0));
  cases.push_back(make_case("robot-human collision", {r0, r1}, {r0, r1}, {far_human}, {hit_human0}, -100.0));
  cases.push_back(make_case("robot-robot collision as first", {r0, r1}, {r0, r1}, {far_human}, {hit_robot01}, -100.0));
  cases.push_back(make_case("robot-robot collision as second", {r0, r1}, {r0, r1}, {far_human}, {hit_robot01}, -100.0, 1));
  cases.push_back(make_case("collision beats timeout", {r0, r1}, {r0, r1}, {far_human}, {timeout, hit_human0}, -100.0));
  cases.push_back(make_case("timeout", {r0, r1}, {r0, r1}, {far_human}, {timeout}, -100.0));
  cases.push_back(make_case("timeout beats proximity", {r0, r1}, {r0, r1}, {gap02}, {timeout}, -100.0));
  cases.push_back(make_case("proximity clamp at 0.2", {r0, r1}, {r0, r1}, {gap02}, {}, -5.0));
  cases.push_back(make_case("proximity at 0.4", {r0, r1}, {r0, r1}, {gap04}, {}, -2.5));
  cases.push_back(make_case("proximity at 0.45", {r0, r1}, {r0, r1}, {gap045}, {}, -1.0 / 0.45));
  cases.push_back(make_case("proximity clamp at 0.1", {r0, r1}, {r0, r1}, {gap01}, {}, -5.0));
  cases.push_back(make_case("proximity beats progress", {r0, r1}, {step04, r1}, {Vec2{0.4, 1.0}}, {}, -2.5));
  cases.push_back(make_case("no proximity at 0.46", {r0, r1}, {r0, r1}, {gap046}, {}, -0.15 * 0.25));
  cases.push_back(make_case("progress 0.4", {r0, r1}, {step04, r1}, {far_human}, {}, 0.5 * 0.4 - 0.15 * 0.25));
  cases.push_back(make_case("regress 0.25", {r0, r1}, {back025, r1}, {far_human}, {}, -0.5 * 0.25 - 0.15 * 0.25));
  cases.push_back(make_case("standing still", {r0, r1}, {r0, r1}, {far_human}, {}, -0.0375));
  cases.push_back(make_case("no humans", {r0, r1}, {step04, r1}, {}, {}, 0.1625));
  cases.push_back(make_case("no head goal", {r0, r1}, {step04, r1}, {far_human}, {}, -0.0375, 0, 0.25, {-1, 1}));
  cases.push_back(make_case("other robot arrival", {r0, r1}, {step04, r1}, {far_human}, {arrive1}, 0.1625));
  cases.push_back(make_case("other robot collision", {r0, r1}, {step04, r1}, {far_human}, {hit_human1}, 0.1625));
  cases.push_back(make_case("time penalty scales with dt", {r0, r1}, {Vec2{0.2, 0.0}, r1}, {far_human}, {},
                            0.5 * 0.2 - 0.15 * 0.1, 0, 0.1));
  cases.push_back(make_case("sideways step", {r0, r1}, {Vec2{0.0, 0.25}, r1}, {Vec2{0.0, 6.0}}, {},
                            0.5 * (10.0 - std::sqrt(100.0 + 0.0625)) - 0.0375));
  return cases;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size(), 0.0);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    for (std::size_t l = 0; t + l < rewards.size(); ++l) out[t] += std::pow(gamma, static_cast<double>(l)) * rewards[t + l];
  }
  return out;
}

std::vector<double> brute_force_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                                    double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) delta[t] = rewards[t] + gamma * values[t + 1] - values[t];
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t l = 0; t + l < n; ++l) out[t] += std::pow(gamma * lambda, static_cast<double>(l)) * delta[t + l];
  }
  return out;
}

double dijkstra_cost(const baselines::GridMap& grid, baselines::Cell start, baselines::Cell goal) {
  using baselines::Cell;
  const double inf = std::numeric_limits<double>::infinity();
  if (!grid.in_bounds(start) || !grid.in_bounds(goal) || grid.blocked(start) || grid.blocked(goal)) return inf;
  std::vector<double> dist(static_cast<std::size_t>(grid.rows()) * grid.cols(), inf);
  auto idx = [&](Cell c) { return static_cast<std::size_t>(c.row) * grid.cols() + c.col; };
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[idx(start)] = 0.0;
  open.push({0.0, idx(start)});
  while (!open.empty()) {
    auto [d, i] = open.top();
    open.pop();
    if (d > dist[i]) continue;
    const Cell c{static_cast<int>(i / grid.cols()), static_cast<int>(i % grid.cols())};
    if (c == goal) return d;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Cell n{c.row + dr, c.col + dc};
        if (!grid.in_bounds(n) || grid.blocked(n)) continue;
        if (dr != 0 && dc != 0 && (grid.blocked({c.row + dr, c.col}) || grid.blocked({c.row, c.col + dc}))) continue;
        const double nd = d + ((dr != 0 && dc != 0) ? std::numbers::sqrt2 : 1.0);
        if (nd < dist[idx(n)]) {
          dist[idx(n)] = nd;
          open.push({nd, idx(n)});
        }
      }
    }
  }
  return inf;
}

baselines::GridMap random_grid(int rows, int cols, double density, std::mt19937_64& rng) {
  baselines::GridMap grid(rows, cols, 1.0);
  std::bernoulli_distribution block(density);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) grid.set_blocked({r, c}, block(rng));
  }
  return grid;
}

RandomHypergraph random_hypergraph(std::mt19937_64& rng, int max_vertices, int max_edges) {
  RandomHypergraph g;
  g.vertices = std::uniform_int_distribution<int>(2, max_vertices)(rng);
  const int m = std::uniform_int_distribution<int>(1, max_edges)(rng);
  std::uniform_real_distribution<double> weight(0.05, 3.0);
  for (int e = 0; e < m; ++e) {
    std::vector<int> all(g.vertices);
    for (int v = 0; v < g.vertices; ++v) all[v] = v;
    std::shuffle(all.begin(), all.end(), rng);
    const int size = std::uniform_int_distribution<int>(2, g.vertices)(rng);
    all.resize(size);
    g.edges.push_back(all);
    g.weights.push_back(weight(rng));
  }
  // Every vertex needs a positive degree; uncovered ones join a random edge.
  std::vector<bool> covered(g.vertices, false);
  for (const auto& e : g.edges) {
    for (int v : e) covered[v] = true;
  }
  for (int v = 0; v < g.vertices; ++v) {
    if (covered[v]) continue;
    auto& e = g.edges[std::uniform_int_distribution<std::size_t>(0, g.edges.size() - 1)(rng)];
    e.push_back(v);
  }
  return g;
}

double orca_encounter_min_gap(int agents, std::uint64_t seed, int steps, double safety_margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = 2.0 + 4.0 * unit(rng);
  const double spin = 2.0 * std::numbers::pi * unit(rng);
  const double dt = 0.25;
  OrcaParams params;
  params.safety_margin = safety_margin;
  std::vector<AgentState> a(agents);
  for (int i = 0; i < agents; ++i) {
    const double ang = spin + 2.0 * std::numbers::pi * i / agents + 0.2 * (unit(rng) - 0.5);
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    a[i].position = dir * radius;
    const double goal_ang = ang + std::numbers::pi + 0.6 * (unit(rng) - 0.5);
    a[i].goal = Vec2{std::cos(goal_ang), std::sin(goal_ang)} * radius;
    a[i].radius = 0.2 + 0.3 * unit(rng);
    a[i].v_pref = 0.5 + unit(rng);
  }
  auto min_gap = [&] {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < agents; ++i) {
      for (int j = i + 1; j < agents; ++j) {
        best = std::min(best, distance(a[i].position, a[j].position) - a[i].radius - a[j].radius);
      }
    }
    return best;
  };
  double best = min_gap();
  for (int s = 0; s < steps; ++s) {
    std::vector<Vec2> v(agents);
    for (int i = 0; i < agents; ++i) {
      std::vector<AgentState> others;
      for (int j = 0; j < agents; ++j) {
        if (j != i) others.push_back(a[j]);
      }
      v[i] = crowd::orca_velocity(a[i], std::span<const AgentState>(others), params, dt);
    }
    for (int i = 0; i < agents; ++i) {
      a[i].velocity = v[i];
      a[i].position += v[i] * dt;
    }
    best = std::min(best, min_gap());
  }
  return best;
}

metrics::EpisodeReport random_report(std::mt19937_64& rng, double t_max) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  metrics::EpisodeReport r;
  r.collision = unit(rng) < 0.3;
  r.timeout = !r.collision && unit(rng) < 0.3;
  r.discomfort_steps = std::uniform_int_distribution<int>(0, 60)(rng);
  r.completion_time = unit(rng) * t_max;
  r.n_pois = std::uniform_int_distribution<int>(1, 20)(rng);
  r.explored = std::uniform_int_distribution<int>(0, r.n_pois)(rng);
  r.success = !r.collision && !r.timeout && r.explored == r.n_pois;
  return r;
}

}  // namespace testsupport
