#include "hypersam/marl/trainer.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "hypersam/errors.hpp"

namespace hypersam::marl {

namespace {

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(std::mt19937_64& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (!is) throw CheckpointError("bad generator state in checkpoint");
}

void write_log_header(std::ofstream& out) {
  out << "step,update,episodes,mean_episode_reward,mean_explored,macro_policy_loss,local_policy_loss,"
         "macro_value_loss,local_value_loss,macro_entropy,local_entropy,approx_kl,clip_fraction\n";
}

}  // namespace

Trainer::Trainer(const ScenarioConfig& config, Architecture arch, std::uint64_t seed)
    : config_(config),
      policy_(config, arch, seed),
      optimizer_(policy_.parameters(), config.train.lr),
      seed_rng_(seed ^ 0x9e3779b97f4a7c15ULL),
      action_rng_(seed + 1),
      update_rng_(seed + 2) {
  validate(config);
}

void Trainer::save(const std::filesystem::path& path) const {
  nn::Checkpoint ckpt = policy_.to_checkpoint();
  ckpt.meta["step"] = steps_;
  ckpt.meta["update"] = updates_;
  ckpt.meta["adam_steps"] = optimizer_.steps();
  ckpt.meta["rng"] = {rng_state(seed_rng_), rng_state(action_rng_), rng_state(update_rng_)};
  const nn::ParamList& params = optimizer_.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ckpt.tensors.push_back({"adam.m." + params[i].name, optimizer_.first_moments()[i]});
    ckpt.tensors.push_back({"adam.v." + params[i].name, optimizer_.second_moments()[i]});
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  nn::save_checkpoint(ckpt, tmp);
  std::filesystem::rename(tmp, path);
}

void Trainer::restore(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  nn::load_params(ckpt, policy_.parameters(), "policy.");
  const nn::ParamList& params = optimizer_.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix* m = ckpt.find("adam.m." + params[i].name);
    const Matrix* v = ckpt.find("adam.v." + params[i].name);
    if (!m || !v) throw CheckpointError("checkpoint lacks optimizer state for " + params[i].name);
    optimizer_.first_moments()[i] = *m;
    optimizer_.second_moments()[i] = *v;
  }
  try {
    steps_ = ckpt.meta.at("step").get<std::int64_t>();
    updates_ = ckpt.meta.at("update").get<int>();
    optimizer_.set_steps(ckpt.meta.at("adam_steps").get<std::int64_t>());
    const auto states = ckpt.meta.at("rng").get<std::vector<std::string>>();
    if (states.size() != 3) throw CheckpointError("bad generator state in checkpoint");
    set_rng_state(seed_rng_, states[0]);
    set_rng_state(action_rng_, states[1]);
    set_rng_state(update_rng_, states[2]);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint lacks training state: ") + e.what());
  }
}

TrainResult Trainer::run(const TrainOptions& options) {
  if (options.resume) restore(*options.resume);
  std::ofstream log;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    const auto log_path = options.out_dir / "train_log.csv";
    const bool append = options.resume && std::filesystem::exists(log_path);
    log.open(log_path, append ? std::ios::app : std::ios::trunc);
    if (!log) throw ConfigError("cannot write " + log_path.string());
    if (!append) write_log_header(log);
    log << std::setprecision(10);
  }

  TrainResult result;
  const TrainConfig& train = config_.train;
  while (steps_ < train.total_steps) {
    RolloutBuffer buffer = collect_rollout(policy_, train.batch_size, seed_rng_, action_rng_);
    for (auto& e : buffer.episodes) e.end_step += steps_;
    steps_ += buffer.steps;
    compute_advantages(buffer, train);
    const UpdateStats stats = ppo_update(policy_, optimizer_, buffer, train, update_rng_);
    ++updates_;

    double reward = 0.0, explored = 0.0;
    for (const auto& e : buffer.episodes) {
      reward += e.reward;
      explored += e.explored;
    }
    const double n = static_cast<double>(buffer.episodes.size());
    if (log) {
      log << steps_ << ',' << updates_ << ',' << buffer.episodes.size() << ',' << reward / n << ','
          << explored / n << ',' << stats.macro_policy_loss << ',' << stats.local_policy_loss << ','
          << stats.macro_value_loss << ',' << stats.local_value_loss << ',' << stats.macro_entropy << ','
          << stats.local_entropy << ',' << stats.approx_kl << ',' << stats.clip_fraction << '\n';
      log.flush();
    }
    result.episodes.insert(result.episodes.end(), buffer.episodes.begin(), buffer.episodes.end());
    result.updates.push_back(stats);
    if (options.on_update) options.on_update(steps_, stats);
    if (!options.out_dir.empty() && train.checkpoint_every > 0 && updates_ % train.checkpoint_every == 0) {
      save(options.out_dir / "checkpoint.json");
    }
  }
  if (!options.out_dir.empty()) save(options.out_dir / "checkpoint.json");
  result.policy = policy_;
  result.steps = steps_;
  return result;
}

std::pair<double, double> reward_trend(const std::vector<EpisodeLog>& episodes, std::int64_t total_steps,
                                       double fraction) {
  const double lo = fraction * static_cast<double>(total_steps);
  const double hi = (1.0 - fraction) * static_cast<double>(total_steps);
  double first = 0.0, last = 0.0;
  int nf = 0, nl = 0;
  for (const auto& e : episodes) {
    if (e.end_step <= lo) {
      first += e.reward;
      ++nf;
    }
    if (e.end_step > hi) {
      last += e.reward;
      ++nl;
    }
  }
  return {nf ? first / nf : 0.0, nl ? last / nl : 0.0};
}

}  // namespace hypersam::marl
