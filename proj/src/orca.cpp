#include "hypersam/orca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hypersam::crowd {

namespace {

constexpr double kEpsilon = 1e-5;

// Line with the permitted region on the left of `direction`.
struct Line {
  Vec2 point;
  Vec2 direction;
};

Line to_line(const HalfPlane& h) { return {h.point, {h.normal.y, -h.normal.x}}; }
HalfPlane to_half_plane(const Line& l) { return {l.point, {-l.direction.y, l.direction.x}}; }

bool linear_program1(const std::vector<Line>& lines, std::size_t line_no, double radius,
                     const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
  const Line& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - line.point.norm_sq();
  if (discriminant < 0.0) return false;

  const double sqrt_discriminant = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_discriminant;
  double t_right = -dot_product + sqrt_discriminant;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::fabs(denominator) <= kEpsilon) {
      if (numerator < 0.0) return false;
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt_velocity, line.direction) > 0.0 ? line.point + t_right * line.direction
                                                      : line.point + t_left * line.direction;
  } else {
    const double t = dot(line.direction, opt_velocity - line.point);
    result = line.point + std::clamp(t, t_left, t_right) * line.direction;
  }
  return true;
}

std::size_t linear_program2(const std::vector<Line>& lines, double radius,
                            const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
  if (direction_opt) {
    result = opt_velocity * radius;
  } else if (opt_velocity.norm_sq() > radius * radius) {
    result = normalized(opt_velocity) * radius;
  } else {
    result = opt_velocity;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 temp = result;
      if (!linear_program1(lines, i, radius, opt_velocity, direction_opt, result)) {
        result = temp;
        return i;
      }
    }
  }
  return lines.size();
}

// Minimises the maximum violation over lines[begin_line..] (the 3D-lifted program).
void linear_program3(const std::vector<Line>& lines, std::size_t begin_line, double radius,
                     Vec2& result) {
  double distance = 0.0;
  for (std::size_t i = begin_line; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) <= distance) continue;

    std::vector<Line> proj_lines;
    proj_lines.reserve(i);
    for (std::size_t j = 0; j < i; ++j) {
      Line line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::fabs(determinant) <= kEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        line.point = lines[i].point +
                     (det(lines[j].direction, lines[i].point - lines[j].point) / determinant) *
                         lines[i].direction;
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      proj_lines.push_back(line);
    }

    const Vec2 temp = result;
    if (linear_program2(proj_lines, radius, Vec2{-lines[i].direction.y, lines[i].direction.x},
                        true, result) < proj_lines.size()) {
      result = temp;
    }
    distance = det(lines[i].direction, lines[i].point - result);
  }
}

Line orca_line(const AgentState& self, const OrcaNeighbor& other, double inv_time_horizon,
               double dt, double margin) {
  const Vec2 relative_position = other.state.position - self.position;
  const Vec2 relative_velocity = self.velocity - other.state.velocity;
  const double dist_sq = relative_position.norm_sq();
  const double combined_radius = self.radius + other.state.radius + margin;
  const double combined_radius_sq = combined_radius * combined_radius;

  Line line;
  Vec2 u;
  if (dist_sq > combined_radius_sq) {
    const Vec2 w = relative_velocity - inv_time_horizon * relative_position;
    const double w_length_sq = w.norm_sq();
    const double dot_product1 = dot(w, relative_position);

    if (dot_product1 < 0.0 && dot_product1 * dot_product1 > combined_radius_sq * w_length_sq) {
      // Project on the cut-off circle.
      const double w_length = std::sqrt(w_length_sq);
      const Vec2 unit_w = w / w_length;
      line.direction = {unit_w.y, -unit_w.x};
      u = (combined_radius * inv_time_horizon - w_length) * unit_w;
    } else {
      // Project on a leg of the cone.
      const double leg = std::sqrt(dist_sq - combined_radius_sq);
      if (det(relative_position, w) > 0.0) {
        line.direction = Vec2{relative_position.x * leg - relative_position.y * combined_radius,
                              relative_position.x * combined_radius + relative_position.y * leg} /
                         dist_sq;
      } else {
        line.direction = -Vec2{relative_position.x * leg + relative_position.y * combined_radius,
                               -relative_position.x * combined_radius + relative_position.y * leg} /
                         dist_sq;
      }
      const double dot_product2 = dot(relative_velocity, line.direction);
      u = dot_product2 * line.direction - relative_velocity;
    }
  } else {
    // Already overlapping: resolve within one time step.
    const double inv_dt = 1.0 / dt;
    const Vec2 w = relative_velocity - inv_dt * relative_position;
    const double w_length = w.norm();
    const Vec2 unit_w = w_length > 0.0 ? w / w_length : Vec2{1.0, 0.0};
    line.direction = {unit_w.y, -unit_w.x};
    u = (combined_radius * inv_dt - w_length) * unit_w;
  }
  const double responsibility = other.reciprocal ? 0.5 : 1.0;
  line.point = self.velocity + responsibility * u;
  return line;
}

}  // namespace

Vec2 preferred_velocity(const AgentState& self, double dt) {
  const Vec2 to_goal = self.goal - self.position;
  const double dist = to_goal.norm();
  if (dist <= 0.0) return {};
  if (dist < self.v_pref * dt) return to_goal / dt;
  return to_goal * (self.v_pref / dist);
}

std::vector<HalfPlane> orca_half_planes(const AgentState& self,
                                        std::span<const OrcaNeighbor> neighbors,
                                        const OrcaParams& params, double dt) {
  std::vector<std::size_t> order;
  const double range_sq = params.neighbor_dist * params.neighbor_dist;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if ((neighbors[i].state.position - self.position).norm_sq() < range_sq) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return (neighbors[a].state.position - self.position).norm_sq() <
           (neighbors[b].state.position - self.position).norm_sq();
  });
  if (order.size() > static_cast<std::size_t>(params.max_neighbors)) {
    order.resize(static_cast<std::size_t>(params.max_neighbors));
  }

  std::vector<HalfPlane> planes;
  planes.reserve(order.size());
  const double inv_time_horizon = 1.0 / params.time_horizon;
  for (std::size_t idx : order) {
    planes.push_back(to_half_plane(orca_line(self, neighbors[idx], inv_time_horizon, dt, params.safety_margin)));
  }
  return planes;
}

Vec2 solve_orca_program(std::span<const HalfPlane> planes, const Vec2& preferred,
                        double max_speed) {
  std::vector<Line> lines;
  lines.reserve(planes.size());
  for (const auto& h : planes) lines.push_back(to_line(h));

  Vec2 result;
  const std::size_t line_fail = linear_program2(lines, max_speed, preferred, false, result);
  if (line_fail < lines.size()) linear_program3(lines, line_fail, max_speed, result);
  return clamp_norm(result, max_speed);
}

Vec2 orca_velocity(const AgentState& self, std::span<const OrcaNeighbor> neighbors,
                   const OrcaParams& params, double dt) {
  const auto planes = orca_half_planes(self, neighbors, params, dt);
  return solve_orca_program(planes, preferred_velocity(self, dt), self.v_pref);
}

Vec2 orca_velocity(const AgentState& self, std::span<const AgentState> neighbors,
                   const OrcaParams& params, double dt) {
  std::vector<OrcaNeighbor> wrapped;
  wrapped.reserve(neighbors.size());
  for (const auto& n : neighbors) wrapped.push_back({n, true});
  return orca_velocity(self, std::span<const OrcaNeighbor>(wrapped), params, dt);
}

AgentState resample_human_goal(const AgentState& human, std::mt19937_64& rng,
                               const ScenarioConfig& config) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool arrived = distance(human.position, human.goal) < human.radius;
  // Always draw so the random stream does not depend on the branch taken.
  const double draw = unit(rng);
  if (!arrived && draw >= config.crowd.p_resample) return human;

  AgentState out = human;
  const double r_max = config.human_activity_radius;
  constexpr double kMinGoalOffset = 1.0;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double r = r_max * std::sqrt(unit(rng));
    const double theta = 2.0 * M_PI * unit(rng);
    const Vec2 goal{r * std::cos(theta), r * std::sin(theta)};
    if (distance(goal, human.position) > kMinGoalOffset) {
      out.goal = goal;
      break;
    }
  }
  out.v_pref = config.crowd.v_pref_min + (config.crowd.v_pref_max - config.crowd.v_pref_min) * unit(rng);
  out.velocity = clamp_norm(out.velocity, out.v_pref);
  return out;
}

}  // namespace hypersam::crowd
