#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pagan/bitaug.hpp"
#include "pagan/harness/config.hpp"
#include "pagan/harness/trainer.hpp"
#include "pagan/harness/verify.hpp"
#include "pagan/random.hpp"
#include "pagan/scheduler.hpp"

namespace fs = std::filesystem;
using namespace pagan;
using harness::CheckResult;

namespace {

int failures = 0;
bool runs_spaced = true;

void report(int id, const std::string& what, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << what << ": " << detail << std::endl;
  if (!pass) ++failures;
}

void report_checks(int id, const std::string& what, const std::vector<CheckResult>& checks) {
  bool pass = true;
  std::string detail;
  for (const auto& c : checks) {
    pass = pass && c.passed;
    if (!detail.empty()) detail += "; ";
    std::ostringstream s;
    s << c.name << " dev=" << c.max_deviation << " tol=" << c.tolerance;
    detail += s.str();
  }
  report(id, what, pass, detail);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string join(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out + "]";
}

harness::ExperimentConfig shipped(const std::string& name) {
  return harness::load_config(fs::path(PAGAN_CONFIG_DIR) / (name + ".cfg"));
}

std::vector<long> level_up_iterations(const std::vector<harness::MetricsRecord>& rows) {
  std::vector<long> out;
  for (const auto& r : rows)
    if (r.event == harness::Event::LevelUp) out.push_back(r.iteration);
  return out;
}

// Smallest, over level-ups, of the peak d_loss within `window` iterations after the event.
double weakest_post_event_peak(const std::vector<harness::MetricsRecord>& rows, long window) {
  double weakest = std::numeric_limits<double>::infinity();
  for (long k : level_up_iterations(rows)) {
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
      if (r.iteration > k && r.iteration <= k + window) peak = std::max(peak, r.d_loss);
    weakest = std::min(weakest, peak);
  }
  return weakest;
}

// Evaluations with d_loss above `threshold` after each level-up, up to the next one or `window`.
double above_threshold_evals(const std::vector<harness::MetricsRecord>& rows, double threshold, long window) {
  const auto events = level_up_iterations(rows);
  double total = 0.0;
  for (std::size_t e = 0; e < events.size(); ++e) {
    const long end = std::min(events[e] + window, e + 1 < events.size() ? events[e + 1] - 1 : events[e] + window);
    for (const auto& r : rows)
      if (r.iteration > events[e] && r.iteration <= end && r.d_loss > threshold) total += 1.0;
  }
  return total;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void regularization_effect() {
  const std::size_t seeds = 5;
  const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = harness::run_seeds(shipped("ring8_baseline"), seeds, std::nullopt, threads);
  const auto pa_in = harness::run_seeds(shipped("ring8_pa_input"), seeds, std::nullopt, threads);
  const auto pa_feat = harness::run_seeds(shipped("ring8_pa_feature"), seeds, std::nullopt, threads);
  const auto reinit = harness::run_seeds(shipped("ring8_reinit"), seeds, std::nullopt, threads);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

  std::vector<double> peaks, pa_above, reinit_above;
  bool every_seed_leveled = true;
  for (const auto& r : pa_in.runs) {
    every_seed_leveled = every_seed_leveled && !level_up_iterations(r.records).empty();
    peaks.push_back(weakest_post_event_peak(r.records, 200));
    pa_above.push_back(above_threshold_evals(r.records, 0.3, 1000));
  }
  for (const auto& r : reinit.runs) reinit_above.push_back(above_threshold_evals(r.records, 0.3, 1000));

  const bool a = base.median_final_d_loss < 0.1 && every_seed_leveled && harness::median(peaks) > 0.3;
  const bool b = pa_in.median_final_test_kid <= base.median_final_test_kid &&
                 pa_feat.median_final_test_kid <= base.median_final_test_kid;
  const double med_reinit = harness::median(reinit_above), med_pa = harness::median(pa_above);
  const bool c = med_reinit > med_pa;

  report(9, "regularization effect on ring8", a && b && c && base.exit_code == 0 && pa_in.exit_code == 0,
         std::string("(a) ") + (a ? "ok" : "no") + " baseline final d_loss " + fmt(base.median_final_d_loss) +
             ", PA(input) post-level-up peaks " + join(peaks) + "; (b) " + (b ? "ok" : "no") +
             " test KID baseline " + fmt(base.median_final_test_kid) + " input " +
             fmt(pa_in.median_final_test_kid) + " feature " + fmt(pa_feat.median_final_test_kid) + "; (c) " +
             (c ? "ok" : "no") + " evals above 0.3 reinit " + fmt(med_reinit) + " vs PA " + fmt(med_pa) + "; " +
             fmt(minutes) + " min");

  for (const auto* group : {&pa_in, &pa_feat, &reinit})
    for (const auto& r : group->runs)
      for (std::size_t i = 1; i < r.records.size(); ++i)
        if (r.records[i].event == harness::Event::LevelUp && r.records[i - 1].event == harness::Event::LevelUp)
          runs_spaced = false;
}

void scheduler_arithmetic() {
  sched::SchedulerState up;
  up.max_level = 4;
  up.kid_history = {0.10, 0.11};
  const auto d1 = sched::progression_decision(up, 0.104);
  sched::SchedulerState hold;
  hold.max_level = 4;
  hold.kid_history = {0.20, 0.18};
  const auto d2 = sched::progression_decision(hold, 0.15);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> kid(0.0, 1.0);
  sched::SchedulerState s;
  s.max_level = 100000;
  bool previous = false, back_to_back = false;
  int level_ups = 0;
  for (int step = 0; step < 20000; ++step) {
    const bool now = sched::progression_decision(s, kid(rng)) == sched::Decision::LevelUp;
    back_to_back = back_to_back || (now && previous);
    level_ups += now;
    previous = now;
  }
  report(10, "progression arithmetic",
         d1 == sched::Decision::LevelUp && d2 == sched::Decision::Hold && !back_to_back && level_ups > 0 && runs_spaced,
         std::string("[0.10,0.11]+0.104 -> ") + (d1 == sched::Decision::LevelUp ? "level_up" : "hold") +
             ", [0.20,0.18]+0.15 -> " + (d2 == sched::Decision::Hold ? "hold" : "level_up") + ", " +
             std::to_string(level_ups) + " level-ups over 20000 random KIDs, back-to-back " +
             (back_to_back ? "yes" : "no") +
             ", training runs " + (runs_spaced ? "spaced" : "back-to-back"));
}

void minibatch_balance() {
  Rng rng(5);
  std::uniform_int_distribution<std::size_t> level(0, 8);
  bool ok = true;
  long batches = 0;
  for (std::size_t n = 2; n <= 64; ++n) {
    for (int rep = 0; rep < 1000; ++rep, ++batches) {
      const auto bits = bitaug::sample_bits(level(rng), 0.5 * uniform01(rng), n, rng);
      const auto b = bitaug::pair_layout(bits);
      ok = ok && b.rows() == 2 * n && b.true_rows().size() == n && b.fake_rows().size() == n;
      for (std::size_t i = 0; i < n && ok; ++i)
        ok = b.labels[i] == bitaug::checksum_label(bitaug::kDataOrigin, bits[i]) &&
             b.labels[n + i] == bitaug::checksum_label(bitaug::kSyntheticOrigin, bits[i]) &&
             b.labels[i] != b.labels[n + i];
    }
  }
  report(11, "minibatch balance", ok, std::to_string(batches) + " batches, sizes 2-64");
}

void determinism() {
  auto cfg = shipped("ring8_pa_input");
  cfg.iterations = 800;
  const fs::path root = fs::temp_directory_path() / "pagan_acceptance_determinism";
  fs::remove_all(root);
  const auto first = harness::run_experiment(cfg, root / "a");
  const auto second = harness::run_experiment(cfg, root / "b");
  const std::string a = read_file(root / "a" / harness::kMetricsFile);
  const std::string b = read_file(root / "b" / harness::kMetricsFile);
  const bool ok = !a.empty() && a == b && first.exit_code == 0 && second.exit_code == 0;
  report(12, "determinism", ok,
         std::to_string(a.size()) + " bytes, " + std::to_string(first.records.size()) + " rows, " +
             std::to_string(first.summary.progressions) + " level-ups, " + (a == b ? "identical" : "different"));
  fs::remove_all(root);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto lemma = harness::check_lemma1(100, 5, 4);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(1, "divergence identity", lemma.passed && lemma.max_deviation < 1e-12 && secs < 1.0,
         "dev=" + fmt(lemma.max_deviation) + " in " + fmt(secs) + " s");

  report_checks(2, "optimal discriminator (parity form)", {harness::check_theorem1(6)});
  report_checks(3, "checksum recursion", {harness::check_checksum_recursion(8)});
  report_checks(4, "zero-bit level-up identity", {harness::check_zero_bit_level_up()});
  report_checks(5, "convolution decomposition", {harness::check_conv_decomposition(100)});
  report_checks(6, "analytic gradients", {harness::check_layer_gradients(), harness::check_loss_gradients()});
  report_checks(7, "spectral norm estimate", {harness::check_spectral_norm(100)});
  report_checks(8, "metric oracles", {harness::check_kid_oracle(), harness::check_frechet_oracle(),
                                      harness::check_gradient_diversity_oracle()});
  regularization_effect();
  scheduler_arithmetic();
  minibatch_balance();
  determinism();

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
