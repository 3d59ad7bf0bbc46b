#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypersam/baselines.hpp"
#include "hypersam/metrics.hpp"

namespace hypersam::eval {

inline constexpr const char* kSocialScoreLabel = "SS-proxy";

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap of the mean with a fixed generator.
Interval bootstrap_mean_ci(std::span<const double> values, int resamples = 2000, double level = 0.95,
                           std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

// HYPERSAM_THREADS when set to a positive integer, otherwise the hardware count.
int thread_count();

struct SuiteOptions {
  // When set, one trace file per episode is written here.
  std::optional<std::filesystem::path> trace_dir;
  int threads = 0;  // 0: thread_count()
};

struct SuiteSummary {
  std::string policy;
  int episodes = 0;
  std::uint64_t base_seed = 0;
  Interval allocation;
  Interval social;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double mean_reward = 0.0;
};

struct SuiteResult {
  std::vector<metrics::EpisodeReport> reports;
  // Relative to the parent of trace_dir; empty when no traces were written.
  std::vector<std::string> trace_files;
  SuiteSummary summary;
};

// Episode i runs with seed base_seed + i; results do not depend on the thread count.
SuiteResult evaluate_suite(const ScenarioConfig& config, baselines::PolicyKind kind, const marl::Policy* policy,
                           int n_episodes, std::uint64_t base_seed, const SuiteOptions& options = {});

SuiteSummary summarize(const std::vector<metrics::EpisodeReport>& reports, const std::string& policy,
                       std::uint64_t base_seed);

void write_reports_csv(const SuiteResult& result, std::ostream& out);
nlohmann::json to_json(const SuiteSummary& summary);

}  // namespace hypersam::eval
