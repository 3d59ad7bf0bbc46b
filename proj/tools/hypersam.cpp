#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hypersam/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot task allocation and crowd navigation"};
  app.require_subcommand(1);

  hypersam::cli::TrainArgs train;
  std::int64_t train_steps = 0;
  std::string resume;
  auto* t = app.add_subcommand("train", "train a policy with multi-agent PPO");
  t->add_option("--config", train.config, "config JSON or preset name")->required();
  t->add_option("--out", train.out, "output directory")->required();
  t->add_option("--seed", train.seed, "training seed");
  t->add_option("--policy", train.policy, "hyper or mlp_ablation");
  t->add_option("--steps", train_steps, "override the step budget");
  t->add_option("--checkpoint", resume, "resume from this checkpoint");

  hypersam::cli::EvalArgs eval;
  std::string checkpoint;
  auto* e = app.add_subcommand("eval", "evaluate a policy over seeded episodes");
  e->add_option("--config", eval.config, "config JSON or preset name")->required();
  e->add_option("--out", eval.out, "output directory")->required();
  e->add_option("--policy", eval.policy, "rta_astar, rta_orca, rta_learned_la, mlp_ablation or hyper");
  e->add_option("--checkpoint", checkpoint, "trained checkpoint for learned policies");
  e->add_option("--episodes", eval.episodes, "number of episodes");
  e->add_option("--seed", eval.seed, "seed of the first episode");
  e->add_flag("!--no-traces", eval.traces, "skip per-episode trace files");

  std::string trace_path, csv_path;
  auto* r = app.add_subcommand("replay", "export a trace as a pose CSV and re-simulate it");
  r->add_option("trace", trace_path, "trace file")->required();
  r->add_option("--out", csv_path, "CSV output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (t->parsed()) {
    if (t->count("--steps")) train.steps = train_steps;
    if (!resume.empty()) train.resume = resume;
    return hypersam::cli::cmd_train(train, std::cout, std::cerr);
  }
  if (e->parsed()) {
    if (!checkpoint.empty()) eval.checkpoint = checkpoint;
    return hypersam::cli::cmd_eval(eval, std::cout, std::cerr);
  }
  return hypersam::cli::cmd_replay(trace_path, csv_path, std::cout, std::cerr);
}
