#include "hypersam/marl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hypersam/errors.hpp"

namespace hypersam::marl {

using nn::Matrix;

std::string to_string(Architecture a) { return a == Architecture::Hyper ? "hyper" : "mlp"; }

Architecture architecture_from_string(const std::string& s) {
  if (s == "hyper") return Architecture::Hyper;
  if (s == "mlp") return Architecture::MlpAblation;
  throw ConfigError("unknown architecture '" + s + "'");
}

namespace {

constexpr int kActorHidden = 64;
constexpr int kCriticHidden = 64;

int ablation_hidden(int d, std::size_t matched_params) {
  // d -> h -> d has h (2d + 1) + d parameters.
  const double h = (static_cast<double>(matched_params) - d) / (2.0 * d + 1.0);
  return std::max(1, static_cast<int>(std::lround(h)));
}

}  // namespace

Policy::Policy(const ScenarioConfig& config, Architecture arch, std::uint64_t seed)
    : config_(config), arch_(arch), seed_(seed) {
  std::mt19937_64 rng(seed);
  const ModelConfig& m = config.model;
  const int d = m.d_model;
  const double hidden_gain = std::sqrt(2.0);
  const double head_gain = config.train.gain;
  spatial_ = nn::SpatialEncoder(kTokenFeatures, kTokenKinds, d, m.heads, m.hidden, m.layers, rng);
  temporal_ = nn::TemporalEncoder(kTokenFeatures, config.history_window, d, m.heads, m.hidden, m.layers, rng);
  fusion_ = nn::CrossModalFusion(d, m.heads, rng);
  hg::DiffusionOps learned = hg::DiffusionOps::learned(d, d, config.diffusion.p, rng);
  if (arch == Architecture::Hyper) {
    diffusion_ = config.diffusion.mode == DiffusionMode::Learned ? learned : hg::DiffusionOps::pure(config.diffusion.p);
  } else {
    const int h = ablation_hidden(d, learned.parameter_count());
    ablation_ = nn::Mlp({d, h, d}, rng, hidden_gain, 1.0);
  }
  const int z = 2 * d + kTokenFeatures;
  macro_query_ = nn::Linear(z, d, rng, head_gain);
  macro_key_ = nn::Linear(z, d, rng, 1.0);
  local_actor_ = nn::Mlp({2 * d + kLocalFeatures, kActorHidden, kActorHidden, 2}, rng, hidden_gain, head_gain);
  log_std_ = Tensor::parameter(Matrix::Constant(1, 2, config.train.init_log_std));
  const int js = joint_state_size(config);
  macro_critic_ = nn::Mlp({js, kCriticHidden, kCriticHidden, 1}, rng, hidden_gain, head_gain);
  local_critic_ = nn::Mlp({js, kCriticHidden, kCriticHidden, 1}, rng, hidden_gain, head_gain);
}

Encoding Policy::encode(const SceneInput& in) const {
  Encoding enc;
  const Tensor xs = spatial_.forward(in.tokens, in.kinds);
  const Tensor xt = temporal_.forward(in.sequences, in.vertex_count(), in.frames);
  enc.x_st = fusion_.forward(xs, xt);
  if (arch_ == Architecture::Hyper) {
    const hg::DiffusionResult r = hg::diffuse(nn::softplus(enc.x_st), in.graph, config_.diffusion, diffusion_);
    enc.g_star = r.g_star;
    enc.diffusion_iterations = r.iterations;
  } else {
    enc.g_star = ablation_.forward(enc.x_st);
  }
  return enc;
}

Tensor Policy::macro_logits(const Encoding& enc, const SceneInput& in, std::span<const int> candidates) const {
  if (candidates.empty()) throw InvalidMacroAction("no candidate POIs to score");
  const std::vector<Tensor> parts{enc.g_star, enc.x_st, Tensor::constant(in.tokens)};
  const Tensor z = nn::concat_cols(parts);
  std::vector<int> rows;
  for (int poi : candidates) rows.push_back(in.poi_row(poi));
  const std::vector<int> ego{0};
  const Tensor q = macro_query_.forward(nn::select_rows(z, ego));
  const Tensor k = macro_key_.forward(nn::select_rows(z, rows));
  return nn::scale(nn::matmul(q, nn::transpose(k)), 1.0 / std::sqrt(static_cast<double>(config_.model.d_model)));
}

Tensor Policy::local_mean(const Encoding& enc, const Matrix& local) const {
  const std::vector<int> ego{0};
  const Eigen::Index n = local.rows();
  const std::vector<Tensor> parts{nn::broadcast_rows(nn::select_rows(enc.x_st, ego), n),
                                  nn::broadcast_rows(nn::select_rows(enc.g_star, ego), n),
                                  Tensor::constant(local)};
  return nn::scale(nn::tanh(local_actor_.forward(nn::concat_cols(parts))), config_.robot_v_pref);
}

Tensor Policy::macro_value(const Matrix& joint) const { return macro_critic_.forward(Tensor::constant(joint)); }

Tensor Policy::local_value(const Matrix& joint) const { return local_critic_.forward(Tensor::constant(joint)); }

nn::ParamList Policy::actor_parameters() const {
  nn::ParamList out;
  spatial_.collect("encoder.spatial", out);
  temporal_.collect("encoder.temporal", out);
  fusion_.collect("encoder.fusion", out);
  if (arch_ == Architecture::Hyper) {
    diffusion_.collect("diffusion", out);
  } else {
    ablation_.collect("ablation", out);
  }
  macro_query_.collect("macro.query", out);
  macro_key_.collect("macro.key", out);
  local_actor_.collect("local.actor", out);
  out.push_back({"local.log_std", log_std_});
  return out;
}

nn::ParamList Policy::critic_parameters() const {
  nn::ParamList out;
  macro_critic_.collect("critic.macro", out);
  local_critic_.collect("critic.local", out);
  return out;
}

nn::ParamList Policy::parameters() const {
  nn::ParamList out = actor_parameters();
  for (auto& p : critic_parameters()) out.push_back(std::move(p));
  return out;
}

std::size_t Policy::diffusion_parameter_count() const {
  return arch_ == Architecture::Hyper ? diffusion_.parameter_count() : ablation_.parameter_count();
}

Policy Policy::clone() const {
  Policy copy(config_, arch_, seed_);
  const nn::ParamList src = parameters();
  const nn::ParamList dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    Tensor t = dst[i].tensor;
    t.mutable_value() = src[i].tensor.value();
  }
  return copy;
}

nn::Checkpoint Policy::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.meta["architecture"] = to_string(arch_);
  ckpt.meta["seed"] = seed_;
  ckpt.meta["config"] = to_json(config_);
  nn::append_params(ckpt, parameters(), "policy.");
  return ckpt;
}

Policy Policy::from_checkpoint(const nn::Checkpoint& ckpt) {
  try {
    Policy p(config_from_json(ckpt.meta.at("config")),
             architecture_from_string(ckpt.meta.at("architecture").get<std::string>()),
             ckpt.meta.at("seed").get<std::uint64_t>());
    nn::load_params(ckpt, p.parameters(), "policy.");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata incomplete: ") + e.what());
  }
}

Policy Policy::load(const std::filesystem::path& path) { return from_checkpoint(nn::load_checkpoint(path)); }

MacroChoice select_macro_action(const Policy& policy, const Encoding& enc, const SceneInput& in,
                                std::vector<int> candidates, int q, std::mt19937_64* rng) {
  MacroChoice choice;
  choice.candidates = std::move(candidates);
  if (choice.candidates.empty()) return choice;
  nn::NoGradGuard guard;
  const Matrix logp = nn::log_softmax_rows(policy.macro_logits(enc, in, choice.candidates)).value();
  const int c = static_cast<int>(choice.candidates.size());
  int head = 0;
  if (rng) {
    std::vector<double> probs(c);
    for (int j = 0; j < c; ++j) probs[j] = std::exp(logp(0, j));
    head = std::discrete_distribution<int>(probs.begin(), probs.end())(*rng);
  } else {
    for (int j = 1; j < c; ++j) {
      if (logp(0, j) > logp(0, head)) head = j;
    }
  }
  choice.head = head;
  choice.logp = logp(0, head);

  std::vector<int> rest;
  for (int j = 0; j < c; ++j) {
    if (j != head) rest.push_back(j);
  }
  std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) { return logp(0, a) > logp(0, b); });
  choice.action.goal_sequence.push_back(choice.candidates[head]);
  for (int j : rest) {
    if (static_cast<int>(choice.action.goal_sequence.size()) >= q) break;
    choice.action.goal_sequence.push_back(choice.candidates[j]);
  }
  return choice;
}

JointDecision decide_macro_actions(const Policy& policy, const env::WorldState& world, std::mt19937_64* rng) {
  JointDecision d;
  const int n = static_cast<int>(world.robots.size());
  const int q = goal_sequence_length(static_cast<int>(world.pois.size()), n);
  std::vector<int> taken;
  for (int i = 0; i < n; ++i) {
    d.inputs.push_back(scene_input(env::observe(world, i), policy.config().diffusion));
    d.encodings.push_back(policy.encode(d.inputs.back()));
    std::vector<int> candidates;
    for (int j = 0; j < static_cast<int>(world.pois.size()); ++j) {
      if (world.pois[j].status() == env::PoiStatus::Explored) continue;
      if (std::find(taken.begin(), taken.end(), j) != taken.end()) continue;
      candidates.push_back(j);
    }
    MacroChoice c = select_macro_action(policy, d.encodings.back(), d.inputs.back(), std::move(candidates), q, rng);
    c.action.issued_at = static_cast<int>(world.decision_steps.size()) - 1;
    if (!c.action.empty()) taken.push_back(c.action.goal_sequence.front());
    d.choices.push_back(std::move(c));
  }
  return d;
}

double gaussian_logp(const Vec2& sample, const Vec2& mean, const Vec2& log_std) {
  auto term = [](double x, double mu, double ls) {
    const double z = (x - mu) / std::exp(ls);
    return -0.5 * z * z - ls - 0.5 * std::log(2.0 * M_PI);
  };
  return term(sample.x, mean.x, log_std.x) + term(sample.y, mean.y, log_std.y);
}

LocalChoice select_local_action(const Policy& policy, const Encoding& enc, const Eigen::RowVectorXd& local,
                                std::mt19937_64* rng) {
  nn::NoGradGuard guard;
  const Matrix mean = policy.local_mean(enc, Matrix(local)).value();
  const Matrix& ls = policy.local_log_std().value();
  const Vec2 mu{mean(0, 0), mean(0, 1)};
  const Vec2 log_std{ls(0, 0), ls(0, 1)};
  LocalChoice c;
  if (rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    c.sample = {mu.x + std::exp(log_std.x) * normal(*rng), mu.y + std::exp(log_std.y) * normal(*rng)};
  } else {
    c.sample = mu;
  }
  c.logp = gaussian_logp(c.sample, mu, log_std);
  c.velocity_command = clamp_norm(c.sample, policy.config().robot_v_pref);
  return c;
}

}  // namespace hypersam::marl
