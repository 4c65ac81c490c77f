#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "pagan/harness/config.hpp"
#include "pagan/harness/metrics_io.hpp"
#include "pagan/harness/trainer.hpp"
#include "pagan/harness/verify.hpp"

namespace fs = std::filesystem;
using namespace pagan::harness;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kConfigError = 2;
constexpr int kNumericalAbort = 3;

fs::path default_run_dir(const ExperimentConfig& cfg) {
  if (const char* root = std::getenv("PAGAN_OUTPUT_ROOT"); root && *root) return fs::path(root) / cfg.name;
  return fs::path("runs") / cfg.name;
}

int do_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out,
           std::size_t seeds, std::size_t threads) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const fs::path dir = out ? fs::path(*out) : default_run_dir(cfg);
  if (seeds <= 1) {
    const auto result = run_experiment(cfg, dir);
    const auto& s = result.summary;
    std::cout << "run " << s.name << " seed " << s.seed << ": " << result.records.size() << " evaluations, level "
              << s.final_level << ", final kid " << s.final.kid << ", test kid " << s.final.test_kid << " -> "
              << dir.string() << "\n";
    if (result.exit_code == kNumericalAbort) std::cerr << "numerical abort: " << s.error << "\n";
    return result.exit_code;
  }
  const auto multi = run_seeds(cfg, seeds, dir, threads);
  std::cout << "run " << cfg.name << " x" << seeds << " seeds: median final kid " << multi.median_final_kid
            << ", median test kid " << multi.median_final_test_kid << ", median final d_loss "
            << multi.median_final_d_loss << " -> " << dir.string() << "\n";
  return multi.exit_code;
}

int do_verify(const std::string& selector) {
  std::vector<CheckResult> results;
  try {
    results = run_verify(selector);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  }
  bool ok = true;
  for (const auto& r : results) {
    std::cout << format_check(r) << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kVerifyFailed;
}

int do_emit(const std::string& run_dir) {
  try {
    emit_metrics(run_dir, std::cout);
  } catch (const std::runtime_error& e) {
    std::cerr << e.what() << "\n";
    return kVerifyFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pagan: progressive augmentation laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train one experiment config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t seeds = 1;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  run->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override train.seed");
  run->add_option("--out", out, "run directory (default $PAGAN_OUTPUT_ROOT/<name> or runs/<name>)");
  run->add_option("--seeds", seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "worker threads for --seeds")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "run oracle checks");
  std::string selector;
  verify->add_option("selector", selector, "lemma1|theorem1|proposition1|checksum|augment_identity|gradients|estimators|all")
      ->required();

  auto* emit = app.add_subcommand("emit", "print a run's metrics as CSV");
  std::string run_dir;
  std::string format = "csv";
  emit->add_option("run_dir", run_dir, "run directory")->required();
  emit->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return do_run(config_path, seed, out, seeds, threads);
    if (*verify) return do_verify(selector);
    if (*emit) return do_emit(run_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVerifyFailed;
  }
  return kOk;
}
