#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace hypersam::cli {

// Exit codes shared by all commands.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;    // bad config, missing checkpoint, corrupt trace
inline constexpr int kRuntimeError = 3;  // numerical failure, replay mismatch

struct TrainArgs {
  std::filesystem::path config;  // JSON file or a preset name
  std::filesystem::path out;
  std::uint64_t seed = 1;
  std::string policy = "hyper";  // hyper | mlp_ablation
  std::optional<std::int64_t> steps;
  std::optional<std::filesystem::path> resume;
};

struct EvalArgs {
  std::filesystem::path config;
  std::string policy = "rta_orca";
  std::optional<std::filesystem::path> checkpoint;
  int episodes = 10;
  std::uint64_t seed = 1;
  std::filesystem::path out;
  bool traces = true;
  int threads = 0;
};

// Writes config.json, train_log.csv and checkpoint.json into args.out.
int cmd_train(const TrainArgs& args, std::ostream& log, std::ostream& err);
// Writes episodes.csv, summary.json and traces/ into args.out.
int cmd_eval(const EvalArgs& args, std::ostream& log, std::ostream& err);
// Writes the pose CSV and checks the trace against a re-simulation.
int cmd_replay(const std::filesystem::path& trace, const std::filesystem::path& out, std::ostream& log,
               std::ostream& err);

}  // namespace hypersam::cli
