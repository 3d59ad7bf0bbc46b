#include "hypersam/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hypersam/errors.hpp"

namespace hypersam {

using nlohmann::json;

std::string to_string(DiffusionMode mode) {
  return mode == DiffusionMode::Pure ? "pure" : "learned";
}

DiffusionMode diffusion_mode_from_string(const std::string& s) {
  if (s == "pure") return DiffusionMode::Pure;
  if (s == "learned") return DiffusionMode::Learned;
  throw ConfigError("unknown diffusion mode '" + s + "'");
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return j.at(key);
}

// Keys absent from the default serialization are typos or stale fields.
void reject_unknown_keys(const json& j, const json& schema, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!schema.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
    if (value.is_object() && schema.at(key).is_object()) reject_unknown_keys(value, schema.at(key), where + key + ".");
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.n_robots >= 1, "n_robots must be >= 1");
  require(c.n_humans >= 0, "n_humans must be >= 0");
  require(c.n_pois >= 1, "n_pois must be >= 1");
  require(positive(c.robot_radius) && positive(c.human_radius), "radii must be positive");
  require(positive(c.robot_v_pref) && positive(c.human_v_pref), "v_pref must be positive");
  require(positive(c.dt), "dt must be positive");
  require(c.max_steps >= 1, "max_steps must be >= 1");
  require(positive(c.spawn_radius) && positive(c.human_activity_radius) &&
              positive(c.poi_circle_radius),
          "circle radii must be positive");
  require(c.macro_interval >= 1, "macro_interval must be >= 1");
  require(c.history_window >= 1, "history_window must be >= 1");
  require(positive(c.discomfort_distance), "discomfort_distance must be positive");

  const auto& o = c.crowd.orca;
  require(positive(o.time_horizon) && positive(o.time_horizon_static) &&
              positive(o.neighbor_dist) && o.max_neighbors >= 1,
          "ORCA parameters must be positive");
  require(o.safety_margin >= 0.0, "safety_margin must be nonnegative");
  require(c.crowd.p_resample >= 0.0 && c.crowd.p_resample <= 1.0, "p_resample must lie in [0,1]");
  require(positive(c.crowd.v_pref_min) && c.crowd.v_pref_max >= c.crowd.v_pref_min,
          "human v_pref range invalid");

  const auto& d = c.diffusion;
  require(d.alpha >= 0.0 && d.alpha <= 1.0, "diffusion alpha must lie in [0,1]");
  require(positive(d.p), "diffusion p must be positive");
  require(positive(d.epsilon), "diffusion epsilon must be positive");
  require(d.max_iterations >= 1 && d.k_unroll >= 1, "diffusion iteration counts must be >= 1");
  require(d.knn_k >= 1, "knn_k must be >= 1");
  require(positive(d.sigma_s), "sigma_s must be positive");

  const auto& m = c.model;
  require(m.d_model >= 1 && m.heads >= 1 && m.layers >= 1 && m.hidden >= 1,
          "model dims must be positive");
  require(m.d_model % m.heads == 0, "d_model must be divisible by heads");

  const auto& t = c.train;
  require(t.lr >= 0.0, "lr must be >= 0");
  require(t.ppo_epochs >= 1, "ppo_epochs must be >= 1");
  require(positive(t.clip) && positive(t.value_clip), "clip must be positive");
  require(t.gamma > 0.0 && t.gamma <= 1.0, "gamma must lie in (0,1]");
  require(t.gae_lambda >= 0.0 && t.gae_lambda <= 1.0, "gae_lambda must lie in [0,1]");
  require(t.total_steps >= 1 && t.batch_size >= 1 && t.num_minibatches >= 1,
          "train budgets must be positive");
  require(positive(t.max_grad_norm) && positive(t.reward_scale), "grad/reward scale must be positive");
  require(t.checkpoint_every >= 1, "checkpoint_every must be >= 1");

  require(positive(c.baseline.grid_resolution), "grid_resolution must be positive");
  require(c.baseline.replan_interval >= 1, "replan_interval must be >= 1");
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = {
      {"n_robots", c.n_robots},
      {"n_humans", c.n_humans},
      {"n_pois", c.n_pois},
      {"robot_radius", c.robot_radius},
      {"human_radius", c.human_radius},
      {"robot_v_pref", c.robot_v_pref},
      {"human_v_pref", c.human_v_pref},
      {"dt", c.dt},
      {"max_steps", c.max_steps},
      {"spawn_radius", c.spawn_radius},
      {"human_activity_radius", c.human_activity_radius},
      {"poi_circle_radius", c.poi_circle_radius},
      {"macro_interval", c.macro_interval},
      {"history_window", c.history_window},
      {"discomfort_distance", c.discomfort_distance},
  };
  j["seeds"] = c.seeds;
  j["crowd"] = {
      {"time_horizon", c.crowd.orca.time_horizon},
      {"time_horizon_static", c.crowd.orca.time_horizon_static},
      {"neighbor_dist", c.crowd.orca.neighbor_dist},
      {"max_neighbors", c.crowd.orca.max_neighbors},
      {"safety_margin", c.crowd.orca.safety_margin},
      {"p_resample", c.crowd.p_resample},
      {"v_pref_min", c.crowd.v_pref_min},
      {"v_pref_max", c.crowd.v_pref_max},
  };
  j["diffusion"] = {
      {"alpha", c.diffusion.alpha},
      {"p", c.diffusion.p},
      {"epsilon", c.diffusion.epsilon},
      {"max_iterations", c.diffusion.max_iterations},
      {"mode", to_string(c.diffusion.mode)},
      {"k_unroll", c.diffusion.k_unroll},
      {"knn_k", c.diffusion.knn_k},
      {"sigma_s", c.diffusion.sigma_s},
  };
  j["model"] = {
      {"d_model", c.model.d_model},
      {"heads", c.model.heads},
      {"layers", c.model.layers},
      {"hidden", c.model.hidden},
  };
  j["train"] = {
      {"lr", c.train.lr},
      {"ppo_epochs", c.train.ppo_epochs},
      {"clip", c.train.clip},
      {"value_clip", c.train.value_clip},
      {"entropy_coef", c.train.entropy_coef},
      {"gain", c.train.gain},
      {"gamma", c.train.gamma},
      {"gae_lambda", c.train.gae_lambda},
      {"total_steps", c.train.total_steps},
      {"batch_size", c.train.batch_size},
      {"num_minibatches", c.train.num_minibatches},
      {"max_grad_norm", c.train.max_grad_norm},
      {"reward_scale", c.train.reward_scale},
      {"init_log_std", c.train.init_log_std},
      {"checkpoint_every", c.train.checkpoint_every},
  };
  j["social_proxy"] = {
      {"collision_penalty", c.social.collision_penalty},
      {"discomfort_penalty", c.social.discomfort_penalty},
      {"timeout_penalty", c.social.timeout_penalty},
      {"time_penalty", c.social.time_penalty},
  };
  j["baseline"] = {
      {"grid_resolution", c.baseline.grid_resolution},
      {"replan_interval", c.baseline.replan_interval},
      {"rta_reallocate", c.baseline.rta_reallocate},
  };
  return j;
}

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  ScenarioConfig c;
  reject_unknown_keys(j, to_json(c), "");
  const json& s = section(j, "scenario");
  read(s, "n_robots", c.n_robots);
  read(s, "n_humans", c.n_humans);
  read(s, "n_pois", c.n_pois);
  read(s, "robot_radius", c.robot_radius);
  read(s, "human_radius", c.human_radius);
  read(s, "robot_v_pref", c.robot_v_pref);
  read(s, "human_v_pref", c.human_v_pref);
  read(s, "dt", c.dt);
  read(s, "max_steps", c.max_steps);
  read(s, "spawn_radius", c.spawn_radius);
  read(s, "human_activity_radius", c.human_activity_radius);
  read(s, "poi_circle_radius", c.poi_circle_radius);
  read(s, "macro_interval", c.macro_interval);
  read(s, "history_window", c.history_window);
  read(s, "discomfort_distance", c.discomfort_distance);
  read(j, "seeds", c.seeds);

  const json& cr = section(j, "crowd");
  read(cr, "time_horizon", c.crowd.orca.time_horizon);
  read(cr, "time_horizon_static", c.crowd.orca.time_horizon_static);
  read(cr, "neighbor_dist", c.crowd.orca.neighbor_dist);
  read(cr, "max_neighbors", c.crowd.orca.max_neighbors);
  read(cr, "safety_margin", c.crowd.orca.safety_margin);
  read(cr, "p_resample", c.crowd.p_resample);
  read(cr, "v_pref_min", c.crowd.v_pref_min);
  read(cr, "v_pref_max", c.crowd.v_pref_max);

  const json& d = section(j, "diffusion");
  read(d, "alpha", c.diffusion.alpha);
  read(d, "p", c.diffusion.p);
  read(d, "epsilon", c.diffusion.epsilon);
  read(d, "max_iterations", c.diffusion.max_iterations);
  if (d.contains("mode")) {
    std::string mode;
    read(d, "mode", mode);
    c.diffusion.mode = diffusion_mode_from_string(mode);
  }
  read(d, "k_unroll", c.diffusion.k_unroll);
  read(d, "knn_k", c.diffusion.knn_k);
  read(d, "sigma_s", c.diffusion.sigma_s);

  const json& m = section(j, "model");
  read(m, "d_model", c.model.d_model);
  read(m, "heads", c.model.heads);
  read(m, "layers", c.model.layers);
  read(m, "hidden", c.model.hidden);

  const json& t = section(j, "train");
  read(t, "lr", c.train.lr);
  read(t, "ppo_epochs", c.train.ppo_epochs);
  read(t, "clip", c.train.clip);
  read(t, "value_clip", c.train.value_clip);
  read(t, "entropy_coef", c.train.entropy_coef);
  read(t, "gain", c.train.gain);
  read(t, "gamma", c.train.gamma);
  read(t, "gae_lambda", c.train.gae_lambda);
  read(t, "total_steps", c.train.total_steps);
  read(t, "batch_size", c.train.batch_size);
  read(t, "num_minibatches", c.train.num_minibatches);
  read(t, "max_grad_norm", c.train.max_grad_norm);
  read(t, "reward_scale", c.train.reward_scale);
  read(t, "init_log_std", c.train.init_log_std);
  read(t, "checkpoint_every", c.train.checkpoint_every);

  const json& sp = section(j, "social_proxy");
  read(sp, "collision_penalty", c.social.collision_penalty);
  read(sp, "discomfort_penalty", c.social.discomfort_penalty);
  read(sp, "timeout_penalty", c.social.timeout_penalty);
  read(sp, "time_penalty", c.social.time_penalty);

  const json& b = section(j, "baseline");
  read(b, "grid_resolution", c.baseline.grid_resolution);
  read(b, "replan_interval", c.baseline.replan_interval);
  read(b, "rta_reallocate", c.baseline.rta_reallocate);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  ScenarioConfig c = config_from_json(j);
  validate(c);
  return c;
}

void save_config(const ScenarioConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << to_json(config).dump(2) << "\n";
}

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig c;
  if (name == "smoke") {
    return c;
  }
  if (name == "r3_h5_p10") {
    c.n_robots = 3, c.n_humans = 5, c.n_pois = 10;
  } else if (name == "r5_h5_p10") {
    c.n_robots = 5, c.n_humans = 5, c.n_pois = 10;
  } else if (name == "r5_h10_p20") {
    c.n_robots = 5, c.n_humans = 10, c.n_pois = 20;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.train.total_steps = 10'000'000;
  return c;
}

}  // namespace hypersam
