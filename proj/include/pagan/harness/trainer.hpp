#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pagan/harness/config.hpp"
#include "pagan/harness/metrics_io.hpp"

namespace pagan::harness {

struct EvalPoint {
  double kid = 0.0;       // generator vs. training samples
  double frechet = 0.0;   // generator vs. training samples
  double test_kid = 0.0;  // generator vs. held-out samples
};

struct RunSummary {
  std::string name;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | numerical_abort
  std::string error;
  long iterations_completed = 0;
  std::size_t final_level = 0;
  std::size_t progressions = 0;  // level-ups or reinitializations
  EvalPoint initial;
  EvalPoint final;
  double final_lr_d = 0.0;
};

struct RunResult {
  std::vector<MetricsRecord> records;
  RunSummary summary;
  int exit_code = 0;  // 0 ok, 3 numerical abort
};

// One deterministic single-threaded run. With `out_dir` set, writes
// metrics.csv (streamed), summary.json, config.txt and final checkpoints.
RunResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir);

struct MultiSeedResult {
  std::vector<RunResult> runs;  // seeds cfg.seed, cfg.seed + 1, ...
  double median_final_kid = 0.0;
  double median_final_test_kid = 0.0;
  double median_final_d_loss = 0.0;
  int exit_code = 0;
};

// Runs `seeds` copies on up to `threads` worker threads; per-seed output goes
// to out_dir/seed_<s>/ plus out_dir/aggregate.json.
MultiSeedResult run_seeds(const ExperimentConfig& cfg, std::size_t seeds,
                          const std::optional<std::filesystem::path>& out_dir, std::size_t threads);

double median(std::vector<double> values);

// Reloads a finished run's generator and draws n samples.
nn::Tensor generate_samples(const std::filesystem::path& run_dir, std::size_t n, std::uint64_t seed);

std::string summary_json(const RunSummary& s);

}  // namespace pagan::harness
