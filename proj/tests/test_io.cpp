#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "hypersam/baselines.hpp"
#include "hypersam/config.hpp"
#include "hypersam/errors.hpp"
#include "hypersam/marl/policy.hpp"
#include "hypersam/nn/checkpoint.hpp"
#include "hypersam/trace.hpp"

using namespace hypersam;

namespace {

io::EpisodeTrace sample_trace(std::uint64_t seed) {
  baselines::EpisodeOptions options;
  options.record_trace = true;
  return baselines::run_baseline(preset("smoke"), seed, baselines::PolicyKind::RtaOrca, nullptr, options).trace;
}

std::string serialize(const io::EpisodeTrace& t) {
  std::ostringstream out;
  io::write_trace(t, out);
  return out.str();
}

}  // namespace

TEST_CASE("trace round trip is exact") {
  const auto trace = sample_trace(21);
  const std::string text = serialize(trace);
  std::istringstream in(text);
  const auto back = io::read_trace(in);
  CHECK(serialize(back) == text);
  CHECK(back.steps.size() == trace.steps.size());
  CHECK(back.seed == 21);
}

TEST_CASE("recorded episodes replay exactly") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto check = io::verify_replay(sample_trace(seed));
    CHECK(check.consistent);
    CHECK(check.max_deviation <= 1e-9);
  }
}

TEST_CASE("tampered trace fails replay") {
  auto trace = sample_trace(4);
  REQUIRE(trace.steps.size() > 2);
  trace.steps[1].robots[0].position.x += 1e-3;
  CHECK_FALSE(io::verify_replay(trace).consistent);
}

TEST_CASE("truncated or foreign traces are rejected") {
  const std::string text = serialize(sample_trace(5));
  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(io::read_trace(truncated), CorruptTrace);
  std::istringstream foreign("not a trace\n");
  CHECK_THROWS_AS(io::read_trace(foreign), CorruptTrace);
  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_trace(empty), CorruptTrace);
}

TEST_CASE("pose csv has one row per state") {
  const auto trace = sample_trace(6);
  std::ostringstream out;
  io::write_pose_csv(trace, out);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == static_cast<int>(trace.steps.size()) + 2);
}

TEST_CASE("config round trip and validation") {
  for (const char* name : {"smoke", "r3_h5_p10", "r5_h5_p10", "r5_h10_p20"}) {
    const ScenarioConfig c = preset(name);
    CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
  }
  ScenarioConfig bad = preset("smoke");
  bad.n_robots = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = preset("smoke");
  bad.diffusion.alpha = 1.5;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = preset("smoke");
  bad.dt = -0.1;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("checkpoint round trip preserves the policy") {
  ScenarioConfig config = preset("smoke");
  config.model = {8, 2, 1, 8};
  for (auto arch : {marl::Architecture::Hyper, marl::Architecture::MlpAblation}) {
    const marl::Policy policy(config, arch, 3);
    const auto path = std::filesystem::temp_directory_path() / "hypersam_ckpt_test.json";
    nn::save_checkpoint(policy.to_checkpoint(), path);
    const marl::Policy back = marl::Policy::load(path);
    std::filesystem::remove(path);
    CHECK(back.architecture() == arch);
    const auto a = policy.to_checkpoint();
    const auto b = back.to_checkpoint();
    REQUIRE(a.tensors.size() == b.tensors.size());
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
      CHECK(a.tensors[i].name == b.tensors[i].name);
      CHECK(a.tensors[i].value == b.tensors[i].value);
    }
  }
}

TEST_CASE("checkpoint loading rejects mismatches") {
  nn::Checkpoint ckpt;
  ckpt.tensors.push_back({"w", nn::Matrix::Ones(2, 3)});
  nn::Tensor wrong = nn::Tensor::parameter(nn::Matrix::Zero(3, 2));
  CHECK_THROWS_AS(nn::load_params(ckpt, {{"w", wrong}}), CheckpointError);
  nn::Tensor missing = nn::Tensor::parameter(nn::Matrix::Zero(2, 3));
  CHECK_THROWS_AS(nn::load_params(ckpt, {{"v", missing}}), CheckpointError);
  nn::Tensor right = nn::Tensor::parameter(nn::Matrix::Zero(2, 3));
  nn::load_params(ckpt, {{"w", right}});
  CHECK(right.value() == nn::Matrix::Ones(2, 3));
  CHECK_THROWS_AS(marl::Policy::load("/nonexistent/ckpt.json"), MissingCheckpoint);
}
