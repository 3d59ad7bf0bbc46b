#include "hypersam/marl/features.hpp"

#include <algorithm>
#include <numeric>

namespace hypersam::marl {

namespace {

void fill_agent(Matrix& m, Eigen::Index row, const Vec2& origin, const Vec2& p, const Vec2& v, double radius) {
  const Vec2 rel = (p - origin) * kPositionScale;
  m.row(row).setZero();
  m(row, 0) = rel.x;
  m(row, 1) = rel.y;
  m(row, 2) = v.x;
  m(row, 3) = v.y;
  m(row, 4) = radius;
  m(row, 5) = rel.norm();
}

void fill_poi(Matrix& m, Eigen::Index row, const Vec2& origin, const env::PoiView& poi, int self_id) {
  const Vec2 rel = (poi.position - origin) * kPositionScale;
  m.row(row).setZero();
  m(row, 0) = rel.x;
  m(row, 1) = rel.y;
  m(row, 5) = rel.norm();
  switch (poi.status) {
    case env::PoiStatus::Unexplored: m(row, 6) = 1.0; break;
    case env::PoiStatus::Assigned: m(row, poi.robot == self_id ? 7 : 8) = 1.0; break;
    case env::PoiStatus::Explored: m(row, 9) = 1.0; break;
  }
}

Matrix frame_tokens(const env::ObservationFrame& f, const Vec2& origin,
                    const std::vector<env::PoiView>& pois, int self_id) {
  const auto n = static_cast<Eigen::Index>(1 + f.others.size() + pois.size());
  Matrix m(n, kTokenFeatures);
  fill_agent(m, 0, origin, f.self_state.position, f.self_state.velocity, f.self_state.radius);
  Eigen::Index row = 1;
  for (const auto& o : f.others) fill_agent(m, row++, origin, o.position, o.velocity, o.radius);
  for (const auto& p : pois) fill_poi(m, row++, origin, p, self_id);
  return m;
}

}  // namespace

int observed_head(const env::Observation& obs) {
  for (std::size_t j = 0; j < obs.poi_view.size(); ++j) {
    const auto& p = obs.poi_view[j];
    if (p.status == env::PoiStatus::Assigned && p.robot == obs.robot_id) return static_cast<int>(j);
  }
  return -1;
}

SceneInput scene_input(const env::Observation& obs, const DiffusionConfig& diffusion) {
  SceneInput in;
  in.n_robots = 1 + obs.n_other_robots;
  in.n_humans = static_cast<int>(obs.others.size()) - obs.n_other_robots;
  in.n_pois = static_cast<int>(obs.poi_view.size());
  const Vec2 origin = obs.self_state.position;

  env::ObservationFrame current{obs.self_state, obs.others, obs.poi_view};
  in.tokens = frame_tokens(current, origin, obs.poi_view, obs.robot_id);
  for (int i = 0; i < in.n_robots; ++i) in.kinds.push_back(i == 0 ? 0 : 1);
  for (int i = 0; i < in.n_humans; ++i) in.kinds.push_back(2);
  for (int i = 0; i < in.n_pois; ++i) in.kinds.push_back(3);

  const int n = in.vertex_count();
  in.frames = std::max<int>(1, static_cast<int>(obs.history.size()));
  in.sequences.resize(static_cast<Eigen::Index>(n) * in.frames, kTokenFeatures);
  for (int f = 0; f < in.frames; ++f) {
    // POIs are static: every frame repeats their current token.
    const Matrix frame = obs.history.empty() ? in.tokens
                                             : frame_tokens(obs.history[f], origin, obs.poi_view, obs.robot_id);
    for (int e = 0; e < n; ++e) in.sequences.row(static_cast<Eigen::Index>(e) * in.frames + f) = frame.row(e);
  }

  std::vector<Vec2> positions;
  positions.push_back(obs.self_state.position);
  for (const auto& o : obs.others) positions.push_back(o.position);
  for (const auto& p : obs.poi_view) positions.push_back(p.position);
  std::vector<hg::VertexKind> vkinds;
  for (int k : in.kinds) {
    vkinds.push_back(k <= 1 ? hg::VertexKind::Robot : k == 2 ? hg::VertexKind::Human : hg::VertexKind::Poi);
  }
  in.graph = hg::build_hypergraph(positions, vkinds, diffusion.knn_k, diffusion.sigma_s);
  return in;
}

Eigen::RowVectorXd local_features(const env::Observation& obs) {
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(kLocalFeatures);
  const AgentState& self = obs.self_state;
  const int head = observed_head(obs);
  if (head >= 0) {
    const Vec2 rel = obs.poi_view[head].position - self.position;
    const double d = rel.norm();
    if (d > 0.0) {
      x(0) = rel.x / d;
      x(1) = rel.y / d;
    }
    x(2) = std::min(d * kPositionScale, 5.0);
    x(3) = 1.0;
  }
  x(4) = self.velocity.x;
  x(5) = self.velocity.y;

  std::vector<int> order(obs.others.size());
  std::iota(order.begin(), order.end(), 0);
  auto gap = [&](int j) {
    return distance(obs.others[j].position, self.position) - obs.others[j].radius - self.radius;
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return gap(a) < gap(b); });
  for (int k = 0; k < kNearestAgents; ++k) {
    const int base = 6 + 5 * k;
    if (k >= static_cast<int>(order.size())) {
      x(base + 4) = 1.0;
      continue;
    }
    const auto& o = obs.others[order[k]];
    const Vec2 rel = o.position - self.position;
    x(base + 0) = rel.x * kPositionScale;
    x(base + 1) = rel.y * kPositionScale;
    x(base + 2) = o.velocity.x - self.velocity.x;
    x(base + 3) = o.velocity.y - self.velocity.y;
    x(base + 4) = std::min(gap(order[k]), 1.0);
  }
  return x;
}

int joint_state_size(const ScenarioConfig& c) { return 2 + 5 * c.n_robots + 4 * c.n_humans + 6 * c.n_pois; }

Eigen::RowVectorXd joint_state(const env::WorldState& w, int ego) {
  const ScenarioConfig& c = *w.config;
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(joint_state_size(c));
  int k = 0;
  x(k++) = w.t / c.t_max();
  x(k++) = std::pow(c.train.gamma, c.max_steps - w.step_index);
  std::vector<int> robots(w.robots.size());
  std::iota(robots.begin(), robots.end(), 0);
  std::rotate(robots.begin(), robots.begin() + ego, robots.end());
  for (int i : robots) {
    const AgentState& r = w.robots[i];
    x(k++) = r.position.x * kPositionScale;
    x(k++) = r.position.y * kPositionScale;
    const int head = env::head_goal(w, i);
    if (head >= 0) {
      const Vec2 rel = (w.pois[head].position() - r.position) * kPositionScale;
      x(k++) = rel.x;
      x(k++) = rel.y;
      x(k++) = 1.0;
    } else {
      k += 3;
    }
  }
  for (const auto& h : w.humans) {
    x(k++) = h.position.x * kPositionScale;
    x(k++) = h.position.y * kPositionScale;
    x(k++) = h.velocity.x;
    x(k++) = h.velocity.y;
  }
  for (const auto& p : w.pois) {
    x(k++) = p.position().x * kPositionScale;
    x(k++) = p.position().y * kPositionScale;
    x(k + static_cast<int>(p.status())) = 1.0;
    k += 3;
    x(k++) = p.status() != env::PoiStatus::Unexplored && p.robot() == ego ? 1.0 : 0.0;
  }
  return x;
}

}  // namespace hypersam::marl
