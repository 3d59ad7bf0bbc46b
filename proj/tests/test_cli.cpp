#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypersam/cli.hpp"

using namespace hypersam;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hypersam_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("eval writes identical outputs on repeat runs") {
  cli::EvalArgs args;
  args.config = "smoke";
  args.episodes = 3;
  args.seed = 40;
  std::ostringstream log, err;
  args.out = scratch("eval_a");
  REQUIRE(cli::cmd_eval(args, log, err) == cli::kOk);
  const fs::path a = args.out;
  args.out = scratch("eval_b");
  args.threads = 1;
  REQUIRE(cli::cmd_eval(args, log, err) == cli::kOk);
  const fs::path b = args.out;
  for (const char* f : {"episodes.csv", "summary.json", "traces/episode_40.trace", "traces/episode_42.trace"}) {
    CAPTURE(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }

  std::ostringstream rlog, rerr;
  const fs::path csv = scratch("replay.csv");
  CHECK(cli::cmd_replay(a / "traces/episode_41.trace", csv, rlog, rerr) == cli::kOk);
  CHECK(fs::exists(csv));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove(csv);
}

TEST_CASE("eval input errors leave no outputs") {
  std::ostringstream log, err;
  cli::EvalArgs args;
  args.config = "smoke";
  args.policy = "hyper";
  args.out = scratch("missing_ckpt");
  CHECK(cli::cmd_eval(args, log, err) == cli::kInputError);
  CHECK_FALSE(fs::exists(args.out));

  args.checkpoint = "/nonexistent/checkpoint.json";
  CHECK(cli::cmd_eval(args, log, err) == cli::kInputError);
  CHECK_FALSE(fs::exists(args.out));

  args = {};
  args.config = "/nonexistent/config.json";
  args.out = scratch("missing_config");
  CHECK(cli::cmd_eval(args, log, err) == cli::kInputError);
  CHECK_FALSE(fs::exists(args.out));

  args.config = "smoke";
  args.policy = "teleport";
  CHECK(cli::cmd_eval(args, log, err) == cli::kInputError);
  CHECK_FALSE(fs::exists(args.out));
}

TEST_CASE("train rejects an invalid config before writing") {
  const fs::path cfg = scratch("bad_config.json");
  {
    std::ofstream out(cfg);
    out << R"({"scenario": {"n_robots": 0}})";
  }
  cli::TrainArgs args;
  args.config = cfg;
  args.out = scratch("bad_train");
  std::ostringstream log, err;
  CHECK(cli::cmd_train(args, log, err) == cli::kInputError);
  CHECK_FALSE(fs::exists(args.out));
  fs::remove(cfg);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path cfg = scratch("typo_config.json");
  {
    std::ofstream out(cfg);
    out << R"({"scenario": {"n_robot": 3}})";
  }
  cli::EvalArgs args;
  args.config = cfg;
  args.out = scratch("typo_eval");
  std::ostringstream log, err;
  CHECK(cli::cmd_eval(args, log, err) == cli::kInputError);
  CHECK(err.str().find("n_robot") != std::string::npos);
  CHECK_FALSE(fs::exists(args.out));
  fs::remove(cfg);
}

TEST_CASE("short training run writes a loadable checkpoint") {
  const fs::path cfg = scratch("tiny_config.json");
  {
    std::ofstream out(cfg);
    out << R"({"scenario": {"n_robots": 2, "n_humans": 1, "n_pois": 2, "max_steps": 30},
              "model": {"d_model": 8, "heads": 2, "layers": 1, "hidden": 8},
              "train": {"total_steps": 60, "batch_size": 30}})";
  }
  cli::TrainArgs train;
  train.config = cfg;
  train.out = scratch("tiny_train");
  std::ostringstream log, err;
  REQUIRE(cli::cmd_train(train, log, err) == cli::kOk);
  CHECK(fs::exists(train.out / "checkpoint.json"));
  CHECK(fs::exists(train.out / "train_log.csv"));
  CHECK(fs::exists(train.out / "config.json"));

  cli::EvalArgs eval;
  eval.config = train.out / "config.json";
  eval.policy = "hyper";
  eval.checkpoint = train.out / "checkpoint.json";
  eval.episodes = 2;
  eval.out = scratch("tiny_eval");
  CHECK(cli::cmd_eval(eval, log, err) == cli::kOk);
  CHECK(fs::exists(eval.out / "summary.json"));

  eval.policy = "mlp_ablation";
  CHECK(cli::cmd_eval(eval, log, err) == cli::kInputError);

  fs::remove(cfg);
  fs::remove_all(train.out);
  fs::remove_all(eval.out);
}

TEST_CASE("replay rejects a truncated trace") {
  const fs::path trace = scratch("truncated.trace");
  {
    std::ofstream out(trace);
    out << "#HYPERSAM-TRACE v1\n";
  }
  std::ostringstream log, err;
  const fs::path csv = scratch("truncated.csv");
  CHECK(cli::cmd_replay(trace, csv, log, err) == cli::kInputError);
  CHECK_FALSE(fs::exists(csv));
  fs::remove(trace);
}
