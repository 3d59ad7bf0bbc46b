#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypersam {

enum class DiffusionMode { Pure, Learned };

struct DiffusionConfig {
  double alpha = 0.9;
  double p = 2.0;
  double epsilon = 1e-4;
  int max_iterations = 200;
  DiffusionMode mode = DiffusionMode::Learned;
  // Fixed iteration count used in Learned mode so the unrolled map is differentiable.
  int k_unroll = 8;
  int knn_k = 3;
  double sigma_s = 5.0;
};

struct OrcaParams {
  double time_horizon = 5.0;
  double time_horizon_static = 5.0;
  double neighbor_dist = 10.0;
  int max_neighbors = 10;
  double safety_margin = 0.01;
};

struct CrowdConfig {
  OrcaParams orca;
  double p_resample = 0.005;
  double v_pref_min = 0.5;
  double v_pref_max = 1.5;
};

struct ModelConfig {
  int d_model = 32;
  int heads = 2;
  int layers = 2;
  int hidden = 64;
};

struct TrainConfig {
  double lr = 5e-4;
  int ppo_epochs = 5;
  double clip = 0.2;
  double value_clip = 0.2;
  double entropy_coef = 0.01;
  double gain = 0.01;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  std::int64_t total_steps = 50'000;
  // Environment steps collected per update (whole episodes, so may overshoot).
  int batch_size = 1000;
  int num_minibatches = 4;
  double max_grad_norm = 10.0;
  double reward_scale = 0.01;
  double init_log_std = -0.5;
  int checkpoint_every = 10;
};

struct SocialProxyConfig {
  double collision_penalty = 100.0;
  double discomfort_penalty = 1.0;
  double timeout_penalty = 25.0;
  double time_penalty = 25.0;
};

struct BaselineConfig {
  double grid_resolution = 0.25;
  int replan_interval = 4;
  bool rta_reallocate = false;
};

struct ScenarioConfig {
  int n_robots = 2;
  int n_humans = 2;
  int n_pois = 4;
  double robot_radius = 0.3;
  double human_radius = 0.3;
  double robot_v_pref = 1.0;
  double human_v_pref = 1.0;
  double dt = 0.25;
  int max_steps = 400;
  double spawn_radius = 8.0;
  double human_activity_radius = 8.0;
  double poi_circle_radius = 25.0;
  int macro_interval = 40;
  int history_window = 5;
  double discomfort_distance = 0.45;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  CrowdConfig crowd;
  DiffusionConfig diffusion;
  ModelConfig model;
  TrainConfig train;
  SocialProxyConfig social;
  BaselineConfig baseline;

  double t_max() const { return max_steps * dt; }
};

// Throws ConfigError describing the first violated constraint.
void validate(const ScenarioConfig& config);

nlohmann::json to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const ScenarioConfig& config, const std::filesystem::path& path);

// Named scenario presets: "smoke" (2/2/4) and the three evaluation setups
// "r3_h5_p10", "r5_h5_p10", "r5_h10_p20".
ScenarioConfig preset(const std::string& name);

std::string to_string(DiffusionMode mode);
DiffusionMode diffusion_mode_from_string(const std::string& s);

}  // namespace hypersam
