#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pagan/harness/config.hpp"
#include "pagan/harness/datasets.hpp"
#include "pagan/harness/metrics_io.hpp"
#include "pagan/harness/trainer.hpp"
#include "pagan/harness/verify.hpp"

namespace fs = std::filesystem;

namespace pagan::harness {
namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pagan_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny(AugMode mode = AugMode::Off) {
  ExperimentConfig c;
  c.name = "tiny";
  c.train_size = 128;
  c.test_size = 64;
  c.generator_layers = "dense:8,relu,dense:2";
  c.discriminator_layers = "dense:8,lrelu,dense:1";
  c.augmentation = mode;
  c.augmentation_site = 0;
  c.batch_size = 16;
  c.kid_samples = 32;
  c.eval_interval = 10;
  c.iterations = 60;
  return c;
}

TEST(Config, RoundTrip) {
  ExperimentConfig c = tiny(AugMode::Feature);
  c.augmentation_site = 1;
  c.loss.label_smooth_positive = 0.9;
  c.warmup = sched::WarmupKind::BitProbRamp;
  c.lr_d = 3.5e-4;
  const auto back = parse_config(to_text(c));
  EXPECT_EQ(to_text(back), to_text(c));
}

TEST(Config, ErrorsAreConfigErrors) {
  EXPECT_THROW(parse_config("bogus.key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("name = a\nname = b\n"), ConfigError);
  EXPECT_THROW(parse_config("optimizer.lr_d = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_NO_THROW(parse_config("# comment\n\nname = x # trailing\n"));
}

TEST(Config, Validation) {
  auto c = tiny();
  c.max_level = 21;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.iterations = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.dataset = "mnist";
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny(AugMode::Feature);
  c.augmentation_site = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.loss.family = losses::Family::WganGp;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(tiny(AugMode::Input).validate());
}

TEST(Config, AugmentSitePlacement) {
  const auto in = tiny(AugMode::Input).discriminator_spec();
  EXPECT_EQ(in.augment_site(), std::optional<std::size_t>(0));
  auto feat = tiny(AugMode::Feature);
  feat.augmentation_site = 1;
  const auto spec = feat.discriminator_spec();
  ASSERT_TRUE(spec.augment_site().has_value());
  EXPECT_TRUE(spec.layers.at(*spec.augment_site() + 1).kind == nn::LayerKind::Dense);
  EXPECT_FALSE(tiny().discriminator_spec().augment_site().has_value());
}

TEST(Datasets, Ring8Modes) {
  Rng rng(1);
  const auto x = draw_samples("ring8", 400, rng);
  ASSERT_EQ(x.shape(), (nn::Shape{400, 2}));
  for (std::size_t i = 0; i < 400; ++i) {
    const double r = std::hypot(x.at(i, 0), x.at(i, 1));
    EXPECT_NEAR(r, 2.0, 0.15);
  }
  EXPECT_EQ(mode_count("ring8"), 8u);
  EXPECT_EQ(mode_count("grid25"), 25u);
  EXPECT_EQ(sample_shape("synth_patterns_8x8"), (nn::Shape{1, 8, 8}));
  EXPECT_FALSE(known_dataset("cifar"));
}

TEST(MetricsIo, NumberFormatting) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(std::stod(format_number(2e-4)), 2e-4);
  EXPECT_EQ(std::stod(format_number(0.1 + 0.2)), 0.1 + 0.2);
  EXPECT_EQ(format_number(1234567.0).find(','), std::string::npos);
}

TEST(MetricsIo, EmptyRunIsHeaderOnly) {
  const auto dir = scratch("empty");
  fs::create_directories(dir);
  { MetricsWriter w(dir / kMetricsFile); }
  std::ostringstream out;
  emit_metrics(dir, out);
  EXPECT_EQ(out.str(), std::string(kMetricsHeader) + "\n");
  fs::remove_all(dir);
}

TEST(MetricsIo, RoundTripAndEvents) {
  const auto dir = scratch("events");
  fs::create_directories(dir);
  MetricsRecord a{10, 0, 0.5, 0.7, 0.1, 0.2, 2e-4, Event::None};
  MetricsRecord b{20, 1, 0.9, 0.6, 0.09, 0.2, 2e-4, Event::LevelUp};
  {
    MetricsWriter w(dir / kMetricsFile);
    w.append(a);
    w.append(b);
  }
  const auto rows = read_metrics_csv(dir / kMetricsFile);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], a);
  EXPECT_EQ(rows[1], b);
  std::ostringstream out;
  emit_metrics(dir, out);
  EXPECT_NE(out.str().find(",level_up\n"), std::string::npos);
  fs::remove_all(dir);
}

TEST(MetricsIo, RejectsDamagedFiles) {
  const auto dir = scratch("damaged");
  fs::create_directories(dir);
  std::ostringstream out;
  EXPECT_THROW(emit_metrics(dir, out), std::runtime_error);
  {
    std::ofstream f(dir / kMetricsFile);
    f << kMetricsHeader << "\n10,0,0.5,0.5,0.1,0.1,0.0002,none";
  }
  EXPECT_THROW(read_metrics_csv(dir / kMetricsFile), std::runtime_error);
  {
    std::ofstream f(dir / kMetricsFile);
    f << kMetricsHeader << "\n10,0,0.5,0.5,0.1,0.1,0.0002,none\n5,0,0.5,0.5,0.1,0.1,0.0002,none\n";
  }
  EXPECT_THROW(read_metrics_csv(dir / kMetricsFile), std::runtime_error);
  {
    std::ofstream f(dir / kMetricsFile);
    f << "iteration,level\n";
  }
  EXPECT_THROW(read_metrics_csv(dir / kMetricsFile), std::runtime_error);
  fs::remove_all(dir);
}

TEST(Trainer, ZeroIterations) {
  auto c = tiny();
  c.iterations = 0;
  const auto dir = scratch("zero");
  const auto r = run_experiment(c, dir);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.summary.iterations_completed, 0);
  EXPECT_EQ(r.summary.final.kid, r.summary.initial.kid);
  EXPECT_EQ(slurp(dir / kMetricsFile), std::string(kMetricsHeader) + "\n");
  EXPECT_TRUE(fs::exists(dir / kSummaryFile));
  fs::remove_all(dir);
}

TEST(Trainer, OneEvaluationGivesTwoLines) {
  auto c = tiny();
  c.iterations = 10;
  const auto dir = scratch("one");
  run_experiment(c, dir);
  std::ostringstream out;
  emit_metrics(dir, out);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  fs::remove_all(dir);
}

TEST(Trainer, DeterministicBytes) {
  const auto c = tiny(AugMode::Input);
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_experiment(c, a);
  run_experiment(c, b);
  EXPECT_EQ(slurp(a / kMetricsFile), slurp(b / kMetricsFile));
  EXPECT_EQ(slurp(a / "generator.ckpt"), slurp(b / "generator.ckpt"));
  auto other = c;
  other.seed = 1;
  const auto d = scratch("det_c");
  run_experiment(other, d);
  EXPECT_NE(slurp(a / kMetricsFile), slurp(d / kMetricsFile));
  for (const auto& p : {a, b, d}) fs::remove_all(p);
}

TEST(Trainer, IterationsStrictlyIncrease) {
  auto c = tiny(AugMode::Feature);
  c.augmentation_site = 1;
  c.iterations = 100;
  const auto r = run_experiment(c, std::nullopt);
  ASSERT_EQ(r.records.size(), 10u);
  for (std::size_t i = 1; i < r.records.size(); ++i) EXPECT_GT(r.records[i].iteration, r.records[i - 1].iteration);
}

TEST(Trainer, LevelUpsAreLoggedAndCapped) {
  auto c = tiny(AugMode::Input);
  c.iterations = 300;
  c.threshold = 0.9;  // saturates almost immediately
  c.max_level = 3;
  const auto r = run_experiment(c, std::nullopt);
  std::size_t ups = 0, level = 0;
  for (const auto& rec : r.records) {
    if (rec.event == Event::LevelUp) {
      ++ups;
      EXPECT_EQ(rec.level, level + 1);
    }
    level = rec.level;
  }
  EXPECT_EQ(ups, 3u);
  EXPECT_EQ(r.summary.final_level, 3u);
}

TEST(Trainer, ReinitBaselineCountsProgressions) {
  auto c = tiny();
  c.reinit_baseline = true;
  c.iterations = 300;
  c.threshold = 0.9;
  c.max_level = 2;
  const auto r = run_experiment(c, std::nullopt);
  EXPECT_EQ(r.summary.progressions, 2u);
  EXPECT_EQ(r.summary.final_level, 2u);
}

TEST(Trainer, LrAdaptDecays) {
  auto c = tiny();
  c.lr_adapt = true;
  c.lr_d = 4e-4;
  c.threshold = 0.9;
  c.iterations = 200;
  const auto r = run_experiment(c, std::nullopt);
  bool decayed = false;
  for (const auto& rec : r.records) decayed = decayed || rec.event == Event::LrDecay;
  EXPECT_TRUE(decayed);
  EXPECT_LT(r.summary.final_lr_d, 4e-4);
  EXPECT_GE(r.summary.final_lr_d, 1e-4);
}

TEST(Trainer, WarmupEventsBracketWindow) {
  auto c = tiny(AugMode::Input);
  c.warmup = sched::WarmupKind::NewWeightOptimizer;
  c.warmup_iters = 30;
  c.threshold = 0.9;
  c.max_level = 1;
  c.iterations = 200;
  const auto r = run_experiment(c, std::nullopt);
  std::vector<Event> seen;
  for (const auto& rec : r.records)
    if (rec.event != Event::None) seen.push_back(rec.event);
  EXPECT_EQ(seen, (std::vector<Event>{Event::LevelUp, Event::WarmupStart, Event::WarmupEnd}));
}

TEST(Trainer, EveryLossFamilyRuns) {
  for (auto fam : {losses::Family::NS, losses::Family::Hinge, losses::Family::WganGp}) {
    auto c = tiny(AugMode::Input);
    c.loss.family = fam;
    if (fam == losses::Family::WganGp) {
      c.loss.gp_weight = 1.0;
      c.loss.wgan_draws = 2;
    }
    c.iterations = 20;
    const auto r = run_experiment(c, std::nullopt);
    EXPECT_EQ(r.exit_code, 0) << losses::family_name(fam);
    EXPECT_EQ(r.records.size(), 2u);
  }
}

TEST(Trainer, ConvDiscriminatorOnPatterns) {
  ExperimentConfig c;
  c.name = "patterns";
  c.dataset = "synth_patterns_8x8";
  c.train_size = 64;
  c.test_size = 32;
  c.latent_dim = 4;
  c.generator_layers = "dense:16,relu,dense:64,tanh,reshape:1:8:8";
  c.discriminator_layers = "conv:4:3:2:same,lrelu,dropout:0.7:spatial,conv:4:3:1:same,lrelu,pool,dense:1";
  c.augmentation = AugMode::Feature;
  c.augmentation_site = 1;
  c.discriminator_spectral_norm = true;
  c.batch_size = 8;
  c.kid_samples = 16;
  c.eval_interval = 5;
  c.iterations = 10;
  c.threshold = 0.9;
  const auto r = run_experiment(c, std::nullopt);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.records.size(), 2u);
}

TEST(Trainer, NumericalAbort) {
  auto c = tiny();
  c.lr_d = 1e6;
  c.lr_g = 1e6;
  c.iterations = 200;
  const auto dir = scratch("abort");
  const auto r = run_experiment(c, dir);
  if (r.exit_code != 0) {
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_EQ(r.summary.status, "numerical_abort");
    EXPECT_FALSE(r.summary.error.empty());
    EXPECT_NE(slurp(dir / kSummaryFile).find("numerical_abort"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Trainer, GenerateSamplesFromCheckpoint) {
  const auto dir = scratch("gen");
  run_experiment(tiny(), dir);
  const auto a = generate_samples(dir, 12, 5), b = generate_samples(dir, 12, 5);
  EXPECT_EQ(a.shape(), (nn::Shape{12, 2}));
  EXPECT_EQ(a, b);
  EXPECT_THROW(generate_samples(dir / "missing", 4, 0), std::exception);
  fs::remove_all(dir);
}

TEST(Trainer, MultiSeedMatchesSingleRuns) {
  auto c = tiny(AugMode::Input);
  c.iterations = 30;
  const auto dir = scratch("multi");
  const auto multi = run_seeds(c, 3, dir, 2);
  ASSERT_EQ(multi.runs.size(), 3u);
  std::vector<double> kids;
  for (std::size_t s = 0; s < 3; ++s) {
    auto single = c;
    single.seed = s;
    const auto r = run_experiment(single, std::nullopt);
    EXPECT_EQ(r.records, multi.runs[s].records);
    kids.push_back(r.summary.final.kid);
    EXPECT_TRUE(fs::exists(dir / ("seed_" + std::to_string(s)) / kMetricsFile));
  }
  EXPECT_EQ(multi.median_final_kid, median(kids));
  EXPECT_TRUE(fs::exists(dir / "aggregate.json"));
  fs::remove_all(dir);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

TEST(Verify, SelectorsAndUnknown) {
  EXPECT_THROW(run_verify("lemma7"), std::invalid_argument);
  const auto r = run_verify("checksum");
  ASSERT_FALSE(r.empty());
  for (const auto& c : r) EXPECT_TRUE(c.passed) << format_check(c);
}

TEST(Verify, Lemma1AndProposition1) {
  const auto l = check_lemma1();
  EXPECT_TRUE(l.passed) << format_check(l);
  EXPECT_LT(l.max_deviation, 1e-12);
  const auto p = check_proposition1();
  EXPECT_TRUE(p.passed) << format_check(p);
}

}  // namespace
}  // namespace pagan::harness
