#include "hypersam/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "hypersam/errors.hpp"

namespace hypersam::eval {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (sorted.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - i;
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

nlohmann::json interval_json(const Interval& v) { return {{"mean", v.mean}, {"ci95_lo", v.lo}, {"ci95_hi", v.hi}}; }

}  // namespace

Interval bootstrap_mean_ci(std::span<const double> values, int resamples, double level, std::uint64_t seed) {
  Interval out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / values.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(resamples);
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
    means[b] = s / values.size();
  }
  std::sort(means.begin(), means.end());
  out.lo = percentile(means, (1.0 - level) / 2.0);
  out.hi = percentile(means, 1.0 - (1.0 - level) / 2.0);
  return out;
}

int thread_count() {
  if (const char* env = std::getenv("HYPERSAM_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SuiteResult evaluate_suite(const ScenarioConfig& config, baselines::PolicyKind kind, const marl::Policy* policy,
                           int n_episodes, std::uint64_t base_seed, const SuiteOptions& options) {
  if (n_episodes < 0) throw ConfigError("episode count must be non-negative");
  if (baselines::needs_checkpoint(kind) && !policy) {
    throw MissingCheckpoint("policy '" + baselines::to_string(kind) + "' needs a checkpoint");
  }
  validate(config);
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  SuiteResult result;
  result.reports.resize(n_episodes);
  result.trace_files.resize(n_episodes);
  const int threads = std::clamp(options.threads > 0 ? options.threads : thread_count(), 1, std::max(1, n_episodes));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < n_episodes; i = next++) {
      try {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        baselines::EpisodeOptions eo;
        eo.record_trace = options.trace_dir.has_value();
        auto episode = baselines::run_baseline(config, seed, kind, policy, eo);
        if (options.trace_dir) {
          const std::string name = "episode_" + std::to_string(seed) + ".trace";
          io::write_trace(episode.trace, *options.trace_dir / name);
          result.trace_files[i] = (options.trace_dir->filename() / name).string();
        }
        result.reports[i] = std::move(episode.report);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_episodes;
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  result.summary = summarize(result.reports, baselines::to_string(kind), base_seed);
  return result;
}

SuiteSummary summarize(const std::vector<metrics::EpisodeReport>& reports, const std::string& policy,
                       std::uint64_t base_seed) {
  SuiteSummary s;
  s.policy = policy;
  s.episodes = static_cast<int>(reports.size());
  s.base_seed = base_seed;
  std::vector<double> alloc, social;
  for (const auto& r : reports) {
    alloc.push_back(r.allocation_score);
    social.push_back(r.social_score);
    s.success_rate += r.success;
    s.collision_rate += r.collision;
    s.timeout_rate += r.timeout;
    s.mean_reward += r.mean_reward;
  }
  if (!reports.empty()) {
    const double n = static_cast<double>(reports.size());
    s.success_rate /= n;
    s.collision_rate /= n;
    s.timeout_rate /= n;
    s.mean_reward /= n;
  }
  s.allocation = bootstrap_mean_ci(alloc);
  s.social = bootstrap_mean_ci(social);
  return s;
}

void write_reports_csv(const SuiteResult& result, std::ostream& out) {
  out << "episode,seed,allocation_score," << kSocialScoreLabel
      << ",success,collision,timeout,discomfort_steps,completion_time,steps,explored,n_pois,mean_reward,"
         "path_length,trace\n";
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    double path = 0.0;
    for (double l : r.path_length) path += l;
    out << i << ',' << r.seed << ',' << fmt(r.allocation_score) << ',' << fmt(r.social_score) << ','
        << r.success << ',' << r.collision << ',' << r.timeout << ',' << r.discomfort_steps << ','
        << fmt(r.completion_time) << ',' << r.steps << ',' << r.explored << ',' << r.n_pois << ','
        << fmt(r.mean_reward) << ',' << fmt(path) << ',' << result.trace_files[i] << '\n';
  }
}

nlohmann::json to_json(const SuiteSummary& s) {
  nlohmann::json j;
  j["policy"] = s.policy;
  j["episodes"] = s.episodes;
  j["base_seed"] = s.base_seed;
  j["allocation_score"] = interval_json(s.allocation);
  j[kSocialScoreLabel] = interval_json(s.social);
  j["social_score_label"] = kSocialScoreLabel;
  j["success_rate"] = s.success_rate;
  j["collision_rate"] = s.collision_rate;
  j["timeout_rate"] = s.timeout_rate;
  j["mean_reward"] = s.mean_reward;
  return j;
}

}  // namespace hypersam::eval
