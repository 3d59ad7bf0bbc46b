#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hypersam/config.hpp"
#include "hypersam/env.hpp"
#include "hypersam/hypergraph.hpp"
#include "hypersam/marl/features.hpp"
#include "hypersam/nn/checkpoint.hpp"
#include "hypersam/nn/layers.hpp"

namespace hypersam::marl {

using nn::Tensor;

// Hyper: X_ST is diffused over the hypergraph. MlpAblation: a two-layer MLP of
// matching parameter count replaces the diffusion.
enum class Architecture { Hyper, MlpAblation };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct Encoding {
  Tensor x_st;    // N x d
  Tensor g_star;  // N x d
  int diffusion_iterations = 0;
};

struct MacroChoice {
  env::MacroAction action;
  int head = -1;  // index into candidates of the sampled head, -1 if none
  double logp = 0.0;
  std::vector<int> candidates;  // POI ids the head was drawn from
};

struct LocalChoice {
  Vec2 sample;            // raw Gaussian draw
  Vec2 velocity_command;  // sample clamped to v_pref
  double logp = 0.0;
};

class Policy {
 public:
  Policy() = default;
  Policy(const ScenarioConfig& config, Architecture arch, std::uint64_t seed);

  Encoding encode(const SceneInput& in) const;

  // 1 x C scores of the candidate POIs (ids) for the ego robot.
  Tensor macro_logits(const Encoding& enc, const SceneInput& in, std::span<const int> candidates) const;
  // L x 2 Gaussian means, one row per local-feature row, all using the ego rows of enc.
  Tensor local_mean(const Encoding& enc, const Matrix& local) const;
  const Tensor& local_log_std() const { return log_std_; }

  // B x 1 values of centralised states.
  Tensor macro_value(const Matrix& joint) const;
  Tensor local_value(const Matrix& joint) const;

  nn::ParamList parameters() const;
  nn::ParamList actor_parameters() const;
  nn::ParamList critic_parameters() const;

  Architecture architecture() const { return arch_; }
  const ScenarioConfig& config() const { return config_; }
  DiffusionMode diffusion_mode() const { return config_.diffusion.mode; }
  std::uint64_t seed() const { return seed_; }
  std::size_t diffusion_parameter_count() const;

  // Independent copy with the same parameter values.
  Policy clone() const;

  nn::Checkpoint to_checkpoint() const;
  // Rebuilds a policy from a checkpoint written by to_checkpoint.
  static Policy from_checkpoint(const nn::Checkpoint& ckpt);
  static Policy load(const std::filesystem::path& path);

 private:
  ScenarioConfig config_;
  Architecture arch_ = Architecture::Hyper;
  std::uint64_t seed_ = 0;
  nn::SpatialEncoder spatial_;
  nn::TemporalEncoder temporal_;
  nn::CrossModalFusion fusion_;
  hg::DiffusionOps diffusion_;
  nn::Mlp ablation_;
  nn::Linear macro_query_;
  nn::Linear macro_key_;
  nn::Mlp local_actor_;
  Tensor log_std_;
  nn::Mlp macro_critic_;
  nn::Mlp local_critic_;
};

inline int goal_sequence_length(int n_pois, int n_robots) { return (n_pois + n_robots - 1) / n_robots; }

// Head drawn from softmax over candidates (argmax when rng is null); the rest of
// the sequence is filled greedily by descending probability up to q goals.
MacroChoice select_macro_action(const Policy& policy, const Encoding& enc, const SceneInput& in,
                                std::vector<int> candidates, int q, std::mt19937_64* rng);

// Sequential decisions for all robots at one decision step. Robots with lower
// index take priority: their heads are removed from later robots' candidates.
struct JointDecision {
  std::vector<MacroChoice> choices;
  std::vector<SceneInput> inputs;
  std::vector<Encoding> encodings;
};
JointDecision decide_macro_actions(const Policy& policy, const env::WorldState& world,
                                   std::mt19937_64* rng);

double gaussian_logp(const Vec2& sample, const Vec2& mean, const Vec2& log_std);

// Gaussian draw around the mean (the mean itself when rng is null).
LocalChoice select_local_action(const Policy& policy, const Encoding& enc,
                                const Eigen::RowVectorXd& local, std::mt19937_64* rng);

}  // namespace hypersam::marl
