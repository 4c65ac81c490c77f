#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "pagan/losses.hpp"
#include "pagan/nn/network.hpp"
#include "pagan/scheduler.hpp"

namespace pagan::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AugMode { Off, Input, Feature };

std::string aug_mode_name(AugMode mode);

struct ExperimentConfig {
  std::string name = "run";

  std::string dataset = "ring8";
  std::size_t train_size = 2048;
  std::size_t test_size = 1024;

  std::size_t latent_dim = 2;
  std::string generator_layers = "dense:64,relu,dense:64,relu,dense:2";
  bool generator_spectral_norm = false;
  std::string discriminator_layers = "dense:64,lrelu,dense:64,lrelu,dense:1";
  bool discriminator_spectral_norm = false;

  losses::LossConfig loss;

  AugMode augmentation = AugMode::Off;
  std::size_t augmentation_site = 1;  // affine layer index for feature mode
  std::size_t max_level = 4;
  bool modulation = true;

  double dropout_keep = 1.0;
  std::size_t dropout_site = 1;  // dropout on the input of this affine layer of D
  nn::DropoutVariant dropout_variant = nn::DropoutVariant::Entrywise;

  double lr_d = 2e-4;
  double lr_g = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int iter_d = 1;
  std::size_t batch_size = 64;

  long eval_interval = 500;
  double threshold = 0.05;
  std::size_t kid_samples = 256;
  sched::WarmupKind warmup = sched::WarmupKind::None;
  long warmup_iters = 0;
  bool lr_adapt = false;
  double lr_decay = 0.8;
  double lr_floor = 1e-4;

  long iterations = 2000;
  std::uint64_t seed = 0;
  bool reinit_baseline = false;

  // Throws ConfigError.
  void validate() const;

  nn::NetworkSpec generator_spec() const;
  nn::NetworkSpec discriminator_spec() const;
};

// Flat "section.key = value" lines; '#' starts a comment. Unknown keys,
// duplicate keys and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Applies a single "key=value" assignment.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string to_text(const ExperimentConfig& cfg);

}  // namespace pagan::harness
