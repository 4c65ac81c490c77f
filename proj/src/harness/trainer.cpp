#include "pagan/harness/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "pagan/bitaug.hpp"
#include "pagan/harness/datasets.hpp"
#include "pagan/losses.hpp"
#include "pagan/metrics.hpp"
#include "pagan/nn/adam.hpp"
#include "pagan/nn/checkpoint.hpp"
#include "pagan/nn/network.hpp"
#include "pagan/scheduler.hpp"

namespace pagan::harness {

namespace {

using bitaug::BitSequence;
using nn::Tensor;
using nn::Var;

enum Stream : std::uint32_t { kDataStream = 1, kInitStream = 2, kTrainStream = 3, kEvalStream = 4 };

Rng make_stream(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  return Rng(seq);
}

Tensor latent(std::size_t n, std::size_t dim, Rng& rng) {
  Tensor z({n, dim});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : z.values()) v = u(rng);
  return z;
}

metrics::Matrix as_rows(const Tensor& t) {
  const std::size_t n = t.dim(0), d = t.size() / n;
  metrics::Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i * d + j];
  return m;
}

class Trainer {
 public:
  explicit Trainer(const ExperimentConfig& cfg)
      : cfg_(cfg),
        data_rng_(make_stream(cfg.seed, kDataStream)),
        init_rng_(make_stream(cfg.seed, kInitStream)),
        rng_(make_stream(cfg.seed, kTrainStream)),
        train_(cfg.dataset, cfg.train_size, data_rng_),
        test_(cfg.dataset, cfg.test_size, data_rng_),
        g_(cfg.generator_spec(), init_rng_),
        d_(cfg.discriminator_spec(), init_rng_),
        opt_g_(g_.parameters(), {cfg.lr_g, cfg.beta1, cfg.beta2, 1e-8}),
        opt_d_(d_.parameters(), {cfg.lr_d, cfg.beta1, cfg.beta2, 1e-8}) {
    Rng eval_rng = make_stream(cfg.seed, kEvalStream);
    eval_z_ = latent(cfg.kid_samples, cfg.latent_dim, eval_rng);
    const Tensor train_ref = train_.head(cfg.kid_samples);
    const Tensor test_ref = test_.head(cfg.kid_samples);
    train_ref_ = as_rows(train_ref);
    test_ref_ = as_rows(test_ref);
    train_stats_ = metrics::sample_stats(train_ref_);

    sched_.max_level = augmented() || cfg.reinit_baseline ? cfg.max_level : 0;
    sched_.eval_interval = cfg.eval_interval;
    sched_.threshold = cfg.threshold;
    sched_.warmup = {augmented() ? cfg.warmup : sched::WarmupKind::None, cfg.warmup_iters};
    sched_.lr_decay = cfg.lr_decay;
    sched_.lr_floor = cfg.lr_floor;
    sched_.lr_d = cfg.lr_d;
  }

  RunResult run(const std::optional<std::filesystem::path>& out_dir) {
    RunResult result;
    auto& s = result.summary;
    s.name = cfg_.name;
    s.seed = cfg_.seed;
    std::unique_ptr<MetricsWriter> writer;
    if (out_dir) {
      std::filesystem::create_directories(*out_dir);
      std::ofstream(*out_dir / "config.txt", std::ios::binary) << to_text(cfg_);
      writer = std::make_unique<MetricsWriter>(*out_dir / kMetricsFile);
    }
    try {
      s.initial = evaluate();
      s.final = s.initial;
      for (long it = 1; it <= cfg_.iterations; ++it) {
        step();
        s.iterations_completed = it;
        if (it % cfg_.eval_interval == 0) {
          MetricsRecord r = evaluation_record(it);
          result.records.push_back(r);
          if (writer) writer->append(r);
        }
      }
      s.final = evaluate();
    } catch (const nn::NumericalError& e) {
      s.status = "numerical_abort";
      s.error = e.what();
      result.exit_code = 3;
    }
    s.final_level = sched_.level;
    s.progressions = progressions_;
    s.final_lr_d = opt_d_.lr();
    if (out_dir) {
      std::ofstream(*out_dir / kSummaryFile, std::ios::binary) << summary_json(s) << '\n';
      if (result.exit_code == 0) {
        nn::save_checkpoint(*out_dir / "generator.ckpt", g_.named_parameters());
        nn::save_checkpoint(*out_dir / "discriminator.ckpt", d_.named_parameters());
      }
    }
    return result;
  }

 private:
  bool augmented() const { return cfg_.augmentation != AugMode::Off; }

  std::vector<BitSequence> draw_bits(std::size_t n, const sched::WarmupDirectives& w) {
    const std::size_t level = d_.augmentation_level();
    if (sched_.warmup.kind == sched::WarmupKind::BitProbRamp && w.active) {
      return bitaug::sample_bits_ramped(level, w.p_one, n, rng_);
    }
    return bitaug::sample_bits(level, 0.5, n, rng_);
  }

  std::vector<std::vector<BitSequence>> draw_wgan_bits(std::size_t n, const sched::WarmupDirectives& w) {
    std::vector<std::vector<BitSequence>> draws{draw_bits(n, w)};
    for (int m = 1; m < cfg_.loss.wgan_draws; ++m) {
      draws.push_back(m == 1 ? bitaug::opposite_checksum_bits(draws.front(), rng_) : draw_bits(n, w));
    }
    return draws;
  }

  Var critic_scores(const Var& samples, const Tensor& bits) {
    return d_.forward(samples, &bits, nn::Mode::Train, rng_);
  }

  losses::Critic critic() {
    return [this](const Var& x, const Tensor& bits) { return critic_scores(x, bits); };
  }

  losses::LossPair classify(const Var& samples, const std::vector<BitSequence>& bits) {
    const auto layout = bitaug::pair_layout(bits);
    const Var scores = critic_scores(samples, layout.bits());
    const Var t = nn::select_rows(scores, layout.true_rows());
    const Var f = nn::select_rows(scores, layout.fake_rows());
    if (cfg_.loss.family == losses::Family::Hinge) return losses::hinge_losses(t, f);
    return losses::ns_losses(t, f, cfg_.loss);
  }

  void step() {
    const auto warm = sched::warmup_controller(sched_, since_level_up_);
    const std::size_t b = cfg_.batch_size;

    for (int k = 0; k < cfg_.iter_d; ++k) {
      const Tensor real = train_.batch(b, rng_);
      Tensor fake;
      {
        nn::NoGradGuard guard;
        fake = g_.forward(nn::constant(latent(b, cfg_.latent_dim, rng_)), nullptr, nn::Mode::Train, rng_).value();
      }
      Var loss;
      if (cfg_.loss.family == losses::Family::WganGp) {
        const auto draws = draw_wgan_bits(b, warm);
        const auto w = losses::wgan_multidraw(critic(), nn::constant(real), nn::constant(fake), draws);
        const double weight = losses::effective_gp_weight(cfg_.loss, since_level_up_);
        const Var gp = losses::gradient_penalty(critic(), real, fake,
                                                bitaug::bits_matrix(draws.front(), d_.augmentation_level()), cfg_.loss,
                                                weight, rng_);
        loss = nn::add(w.d_objective, gp);
      } else {
        const auto bits = draw_bits(b, warm);
        loss = classify(nn::constant(bitaug::build_minibatch(real, fake, bits).samples), bits).d_loss;
      }
      d_sum_ += loss.value()[0];
      ++d_count_;
      nn::backward(loss);
      if (warm.route_new_weights_to_aux_optimizer && aux_) {
        aux_->step();
      } else {
        opt_d_.step();
      }
      opt_d_.zero_grad();
    }

    if (!warm.route_new_weights_to_aux_optimizer) {
      const Tensor real = train_.batch(b, rng_);
      const Var fake = g_.forward(nn::constant(latent(b, cfg_.latent_dim, rng_)), nullptr, nn::Mode::Train, rng_);
      const Var samples = nn::concat_rows({nn::constant(real), fake});
      Var loss;
      if (cfg_.loss.family == losses::Family::WganGp) {
        loss = losses::wgan_multidraw(critic(), nn::constant(real), fake, draw_wgan_bits(b, warm)).g_objective;
      } else {
        loss = classify(samples, draw_bits(b, warm)).g_loss;
      }
      g_sum_ += loss.value()[0];
      ++g_count_;
      nn::backward(loss);
      opt_g_.step();
      opt_d_.zero_grad();
    }
    if (since_level_up_) ++*since_level_up_;
  }

  EvalPoint evaluate() {
    Tensor samples;
    {
      nn::NoGradGuard guard;
      samples = g_.forward(nn::constant(eval_z_), nullptr, nn::Mode::Eval, rng_).value();
    }
    const metrics::Matrix fake = as_rows(samples);
    EvalPoint p;
    p.kid = metrics::kid_unbiased(fake, train_ref_);
    p.test_kid = metrics::kid_unbiased(fake, test_ref_);
    p.frechet = metrics::frechet_distance(metrics::sample_stats(fake), train_stats_);
    return p;
  }

  MetricsRecord evaluation_record(long it) {
    const EvalPoint p = evaluate();
    MetricsRecord r;
    r.iteration = it;
    r.d_loss = d_count_ ? d_sum_ / static_cast<double>(d_count_) : last_d_;
    r.g_loss = g_count_ ? g_sum_ / static_cast<double>(g_count_) : last_g_;
    last_d_ = r.d_loss;
    last_g_ = r.g_loss;
    d_sum_ = g_sum_ = 0.0;
    d_count_ = g_count_ = 0;
    r.kid = p.kid;
    r.frechet = p.frechet;

    if (augmented()) {
      if (sched::progression_decision(sched_, p.kid) == sched::Decision::LevelUp) {
        d_.level_up(init_rng_);
        const auto fresh = d_.newest_bit_parameters();
        opt_d_.add_parameters(fresh);
        if (sched_.warmup.kind == sched::WarmupKind::NewWeightOptimizer) {
          aux_ = std::make_unique<nn::Adam>(fresh, opt_d_.state().hyper);
        }
        since_level_up_ = 0;
        warmup_open_ = sched_.warmup.kind != sched::WarmupKind::None;
        warmup_announced_ = false;
        ++progressions_;
        r.event = Event::LevelUp;
      }
    } else if (cfg_.reinit_baseline) {
      if (sched::progression_decision(sched_, p.kid) == sched::Decision::LevelUp) {
        d_.reinitialize(init_rng_);
        opt_d_ = nn::Adam(d_.parameters(), opt_d_.state().hyper);
        since_level_up_ = 0;
        ++progressions_;
        r.event = Event::LevelUp;
      }
    } else if (cfg_.lr_adapt) {
      if (sched::lr_adapt_decision(sched_, p.kid) == sched::Decision::DecayLr) {
        opt_d_.set_lr(sched_.lr_d);
        r.event = Event::LrDecay;
      }
    } else {
      sched::progression_decision(sched_, p.kid);
    }

    if (r.event == Event::None && warmup_open_) {
      const bool active = sched::warmup_controller(sched_, since_level_up_).active;
      if (!active) {
        r.event = Event::WarmupEnd;
        warmup_open_ = false;
        aux_.reset();
      } else if (!warmup_announced_) {
        r.event = Event::WarmupStart;
        warmup_announced_ = true;
      }
    }
    r.level = sched_.level;
    r.lr_d = opt_d_.lr();
    return r;
  }

  const ExperimentConfig& cfg_;
  Rng data_rng_;
  Rng init_rng_;
  Rng rng_;
  FiniteDataset train_;
  FiniteDataset test_;
  nn::Network g_;
  nn::Network d_;
  nn::Adam opt_g_;
  nn::Adam opt_d_;
  std::unique_ptr<nn::Adam> aux_;
  sched::SchedulerState sched_;
  std::optional<long> since_level_up_;
  bool warmup_open_ = false;
  bool warmup_announced_ = false;
  std::size_t progressions_ = 0;

  Tensor eval_z_;
  metrics::Matrix train_ref_;
  metrics::Matrix test_ref_;
  metrics::SampleStats train_stats_;

  double d_sum_ = 0.0, g_sum_ = 0.0, last_d_ = 0.0, last_g_ = 0.0;
  long d_count_ = 0, g_count_ = 0;
};

nlohmann::json point_json(const EvalPoint& p) {
  return {{"kid", p.kid}, {"frechet", p.frechet}, {"test_kid", p.test_kid}};
}

}  // namespace

std::string summary_json(const RunSummary& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["status"] = s.status;
  if (!s.error.empty()) j["error"] = s.error;
  j["iterations_completed"] = s.iterations_completed;
  j["final_level"] = s.final_level;
  j["progressions"] = s.progressions;
  j["final_lr_d"] = s.final_lr_d;
  j["initial"] = point_json(s.initial);
  j["final"] = point_json(s.final);
  return j.dump(2);
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  Trainer trainer(cfg);
  return trainer.run(out_dir);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MultiSeedResult run_seeds(const ExperimentConfig& cfg, std::size_t seeds,
                          const std::optional<std::filesystem::path>& out_dir, std::size_t threads) {
  cfg.validate();
  MultiSeedResult out;
  out.runs.resize(seeds);
  std::vector<ExperimentConfig> configs(seeds, cfg);
  for (std::size_t i = 0; i < seeds; ++i) configs[i].seed = cfg.seed + i;

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds; i = next++) {
      try {
        std::optional<std::filesystem::path> dir;
        if (out_dir) dir = *out_dir / ("seed_" + std::to_string(configs[i].seed));
        out.runs[i] = run_experiment(configs[i], dir);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, seeds));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::vector<double> kid, test_kid, d_loss;
  for (const auto& r : out.runs) {
    kid.push_back(r.summary.final.kid);
    test_kid.push_back(r.summary.final.test_kid);
    d_loss.push_back(r.records.empty() ? 0.0 : r.records.back().d_loss);
    out.exit_code = std::max(out.exit_code, r.exit_code);
  }
  out.median_final_kid = median(kid);
  out.median_final_test_kid = median(test_kid);
  out.median_final_d_loss = median(d_loss);
  if (out_dir) {
    nlohmann::json j;
    j["name"] = cfg.name;
    j["seeds"] = seeds;
    j["first_seed"] = cfg.seed;
    j["median_final_kid"] = out.median_final_kid;
    j["median_final_test_kid"] = out.median_final_test_kid;
    j["median_final_d_loss"] = out.median_final_d_loss;
    std::ofstream(*out_dir / "aggregate.json", std::ios::binary) << j.dump(2) << '\n';
  }
  return out;
}

}  // namespace pagan::harness

namespace pagan::harness {

nn::Tensor generate_samples(const std::filesystem::path& run_dir, std::size_t n, std::uint64_t seed) {
  const ExperimentConfig cfg = load_config(run_dir / "config.txt");
  Rng init(seed);
  nn::Network g(cfg.generator_spec(), init);
  g.load_parameters(nn::load_checkpoint(run_dir / "generator.ckpt"));
  Rng rng(seed);
  nn::NoGradGuard no_grad;
  return g.forward(nn::constant(latent(n, cfg.latent_dim, rng)), nullptr, nn::Mode::Eval, rng).value();
}

}  // namespace pagan::harness
