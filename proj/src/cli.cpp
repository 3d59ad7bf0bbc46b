#include "hypersam/cli.hpp"

#include <fstream>
#include <ostream>

#include "hypersam/baselines.hpp"
#include "hypersam/config.hpp"
#include "hypersam/errors.hpp"
#include "hypersam/evaluate.hpp"
#include "hypersam/marl/trainer.hpp"
#include "hypersam/trace.hpp"

namespace hypersam::cli {

namespace {

ScenarioConfig resolve_config(const std::filesystem::path& source) {
  if (std::filesystem::exists(source)) return load_config(source);
  if (source.extension().empty() && !source.has_parent_path()) return preset(source.string());
  throw ConfigError("config file not found: " + source.string());
}

marl::Architecture training_architecture(const std::string& name) {
  if (name == "hyper") return marl::Architecture::Hyper;
  if (name == "mlp_ablation" || name == "mlp") return marl::Architecture::MlpAblation;
  throw ConfigError("cannot train policy '" + name + "'; expected hyper or mlp_ablation");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& log, std::ostream& err) {
  ScenarioConfig config;
  marl::Architecture arch{};
  try {
    config = resolve_config(args.config);
    if (args.steps) config.train.total_steps = *args.steps;
    validate(config);
    arch = training_architecture(args.policy);
    if (args.resume && !std::filesystem::exists(*args.resume)) {
      throw MissingCheckpoint("checkpoint not found: " + args.resume->string());
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    std::filesystem::create_directories(args.out);
    save_config(config, args.out / "config.json");
    marl::Trainer trainer(config, arch, args.seed);
    marl::TrainOptions options;
    options.out_dir = args.out;
    options.resume = args.resume;
    options.on_update = [&](std::int64_t steps, const marl::UpdateStats& s) {
      log << "step " << steps << " local_loss " << s.local_policy_loss << " macro_loss " << s.macro_policy_loss
          << " kl " << s.approx_kl << '\n';
    };
    const marl::TrainResult result = trainer.run(options);
    const auto [first, last] = marl::reward_trend(result.episodes, result.steps);
    log << "trained " << result.steps << " steps in " << result.updates.size() << " updates; mean episode reward "
        << first << " -> " << last << '\n';
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}

int cmd_eval(const EvalArgs& args, std::ostream& log, std::ostream& err) {
  ScenarioConfig config;
  baselines::PolicyKind kind{};
  std::optional<marl::Policy> policy;
  try {
    config = resolve_config(args.config);
    kind = baselines::policy_kind_from_string(args.policy);
    if (args.episodes < 0) throw ConfigError("episode count must be non-negative");
    if (baselines::needs_checkpoint(kind)) {
      if (!args.checkpoint) throw MissingCheckpoint("policy '" + args.policy + "' needs --checkpoint");
      policy = marl::Policy::load(*args.checkpoint);
      if (kind == baselines::PolicyKind::Hyper && policy->architecture() != marl::Architecture::Hyper) {
        throw ConfigError("checkpoint holds an mlp_ablation policy, not hyper");
      }
      if (kind == baselines::PolicyKind::MlpAblation && policy->architecture() != marl::Architecture::MlpAblation) {
        throw ConfigError("checkpoint holds a hyper policy, not mlp_ablation");
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    std::filesystem::create_directories(args.out);
    eval::SuiteOptions options;
    if (args.traces) options.trace_dir = args.out / "traces";
    options.threads = args.threads;
    const eval::SuiteResult result =
        eval::evaluate_suite(config, kind, policy ? &*policy : nullptr, args.episodes, args.seed, options);
    {
      std::ofstream csv(args.out / "episodes.csv", std::ios::binary | std::ios::trunc);
      if (!csv) throw ConfigError("cannot write " + (args.out / "episodes.csv").string());
      eval::write_reports_csv(result, csv);
    }
    write_text(args.out / "summary.json", eval::to_json(result.summary).dump(2) + "\n");
    const auto& s = result.summary;
    log << s.policy << ": " << s.episodes << " episodes, allocation score " << s.allocation.mean << " ["
        << s.allocation.lo << ", " << s.allocation.hi << "], " << eval::kSocialScoreLabel << ' ' << s.social.mean
        << " [" << s.social.lo << ", " << s.social.hi << "]\n";
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}

int cmd_replay(const std::filesystem::path& trace_path, const std::filesystem::path& out, std::ostream& log,
               std::ostream& err) {
  io::EpisodeTrace trace;
  try {
    trace = io::read_trace(trace_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  try {
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream csv(out, std::ios::binary | std::ios::trunc);
    if (!csv) throw ConfigError("cannot write " + out.string());
    io::write_pose_csv(trace, csv);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  const io::ReplayCheck check = io::verify_replay(trace);
  if (!check.consistent) {
    err << "replay mismatch: " << check.message << '\n';
    return kRuntimeError;
  }
  log << "replay consistent over " << trace.steps.size() << " steps, max deviation " << check.max_deviation << '\n';
  return kOk;
}

}  // namespace hypersam::cli
