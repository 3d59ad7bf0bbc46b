#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hypersam/baselines.hpp"
#include "hypersam/config.hpp"
#include "hypersam/env.hpp"
#include "hypersam/hypergraph.hpp"
#include "hypersam/metrics.hpp"

namespace testsupport {

using hypersam::Vec2;

// A hand-built world: robots and humans at the given centres (radius 0.3),
// POIs as given, robot i heading for POI plans[i] (-1 for none).
hypersam::env::WorldState make_world(const std::vector<Vec2>& robots, const std::vector<Vec2>& humans,
                                     const std::vector<Vec2>& pois, const std::vector<int>& heads,
                                     int step_index = 10, double dt = 0.25);

struct RewardCase {
  std::string name;
  hypersam::env::WorldState before;
  hypersam::env::WorldState after;
  int robot = 0;
  std::vector<hypersam::env::Event> events;
  double expected = 0.0;
};

// Hand-evaluated reward fixtures covering every branch and their precedence.
std::vector<RewardCase> reward_cases();

// sum_{l >= 0} gamma^l r_{t+l}, evaluated term by term.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);
// sum_l (gamma lambda)^l delta_{t+l} by direct double summation; values has n + 1 entries.
std::vector<double> brute_force_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                                    double lambda);

// Uniform-cost search over the same move set as the planner; +inf when unreachable.
double dijkstra_cost(const hypersam::baselines::GridMap& grid, hypersam::baselines::Cell start,
                     hypersam::baselines::Cell goal);
hypersam::baselines::GridMap random_grid(int rows, int cols, double density, std::mt19937_64& rng);

struct RandomHypergraph {
  int vertices = 0;
  std::vector<std::vector<int>> edges;
  std::vector<double> weights;
};
RandomHypergraph random_hypergraph(std::mt19937_64& rng, int max_vertices = 20, int max_edges = 15);

// Minimum over the run of (centre distance - sum of radii) for agents that all
// steer with reciprocal ORCA toward goals placed so that their paths cross.
double orca_encounter_min_gap(int agents, std::uint64_t seed, int steps = 200,
                              double safety_margin = hypersam::OrcaParams{}.safety_margin);

hypersam::metrics::EpisodeReport random_report(std::mt19937_64& rng, double t_max);

// Central-difference checks of every differentiable operation family over
// several random shapes; reports the worst relative error per family.
struct GradientFamily {
  std::string name;
  int shapes = 0;
  int checks = 0;
  double max_relative_error = 0.0;
};
std::vector<GradientFamily> run_gradient_suite();

}  // namespace testsupport
