#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hypersam/config.hpp"
#include "hypersam/env.hpp"
#include "hypersam/marl/policy.hpp"
#include "hypersam/metrics.hpp"
#include "hypersam/trace.hpp"

namespace hypersam::baselines {

enum class PolicyKind { RtaAstar, RtaOrca, RtaLearnedLa, MlpAblation, Hyper };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);
bool needs_checkpoint(PolicyKind kind);

// Shuffles the POIs and deals them round-robin over a shuffled robot order, so
// per-robot counts differ by at most one. Dealing order is the visiting order.
std::vector<env::MacroAction> rta_allocate(std::span<const int> pois, int n_robots, std::mt19937_64& rng);

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

// Occupancy grid; cell (r, c) covers [origin + c*res, origin + (c+1)*res) in x
// and the same with r in y.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int rows, int cols, double resolution, Vec2 origin = {});
  // '.' free, '#' blocked; line i is row i.
  static GridMap from_text(const std::string& text, double resolution = 1.0, Vec2 origin = {});

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }
  bool blocked(Cell c) const { return occupancy_[index(c)] != 0; }
  void set_blocked(Cell c, bool value = true) { occupancy_[index(c)] = value ? 1 : 0; }
  Cell cell_of(const Vec2& p) const;
  Vec2 center(Cell c) const;
  // Blocks every cell whose centre lies within radius of p.
  void block_disc(const Vec2& p, double radius);

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * cols_ + c.col; }
  int rows_ = 0, cols_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_;
  std::vector<unsigned char> occupancy_;
};

// Optimal 8-connected path (octile costs, no corner cutting) including both
// endpoints. Throws NoPath when the goal is blocked or unreachable.
std::vector<Cell> astar_plan(const GridMap& grid, Cell start, Cell goal);
// Octile length in cells.
double path_cost(std::span<const Cell> path);

struct EpisodeOptions {
  bool record_trace = false;
};

struct EpisodeResult {
  metrics::EpisodeReport report;
  io::EpisodeTrace trace;
};

// Runs one episode under the named pipeline. Learned kinds act
// deterministically (argmax allocation, mean velocity) and require a policy.
EpisodeResult run_baseline(const ScenarioConfig& config, std::uint64_t seed, PolicyKind kind,
                           const marl::Policy* policy = nullptr, const EpisodeOptions& options = {});

}  // namespace hypersam::baselines
