#include "pagan/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "pagan/harness/datasets.hpp"
#include "pagan/prob_oracle.hpp"

namespace pagan::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what) {
  throw ConfigError("config key '" + key + "': '" + value + "' is not " + what);
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "an integer");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long n = to_long(key, v);
  if (n < 0) bad(key, v, "a non-negative integer");
  return static_cast<std::size_t>(n);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  bad(key, v, "a number");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad(key, v, "a boolean");
}

std::string real_text(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field count_field(T ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = static_cast<T>(to_count(k, v)); },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field long_field(long ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = to_long(k, v); },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field real_field(double ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = to_real(k, v); },
          [m](const ExperimentConfig& c) { return real_text(c.*m); }};
}

Field bool_field(bool ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = to_bool(k, v); },
          [m](const ExperimentConfig& c) { return bool_text(c.*m); }};
}

Field string_field(std::string ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string&, const std::string& v) { c.*m = v; },
          [m](const ExperimentConfig& c) { return c.*m; }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("name", string_field(&ExperimentConfig::name));
    t.emplace_back("dataset.name", string_field(&ExperimentConfig::dataset));
    t.emplace_back("dataset.train_size", count_field(&ExperimentConfig::train_size));
    t.emplace_back("dataset.test_size", count_field(&ExperimentConfig::test_size));
    t.emplace_back("generator.latent_dim", count_field(&ExperimentConfig::latent_dim));
    t.emplace_back("generator.layers", string_field(&ExperimentConfig::generator_layers));
    t.emplace_back("generator.spectral_norm", bool_field(&ExperimentConfig::generator_spectral_norm));
    t.emplace_back("discriminator.layers", string_field(&ExperimentConfig::discriminator_layers));
    t.emplace_back("discriminator.spectral_norm", bool_field(&ExperimentConfig::discriminator_spectral_norm));
    t.emplace_back("loss.family",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           try {
                             c.loss.family = losses::parse_family(v);
                           } catch (const std::invalid_argument&) {
                             bad(k, v, "one of ns, hinge, wgan_gp");
                           }
                         },
                         [](const ExperimentConfig& c) { return losses::family_name(c.loss.family); }});
    t.emplace_back("loss.label_smooth_positive",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.loss.label_smooth_positive = to_real(k, v);
                         },
                         [](const ExperimentConfig& c) { return real_text(c.loss.label_smooth_positive); }});
    t.emplace_back("loss.gp_weight",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.gp_weight = to_real(k, v); },
                         [](const ExperimentConfig& c) { return real_text(c.loss.gp_weight); }});
    t.emplace_back("loss.gp_variant",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           try {
                             c.loss.gp_variant = losses::parse_gp_variant(v);
                           } catch (const std::invalid_argument&) {
                             bad(k, v, "one of one_centered, zero_centered");
                           }
                         },
                         [](const ExperimentConfig& c) { return losses::gp_variant_name(c.loss.gp_variant); }});
    t.emplace_back("loss.wgan_draws",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.loss.wgan_draws = static_cast<int>(to_long(k, v));
                         },
                         [](const ExperimentConfig& c) { return std::to_string(c.loss.wgan_draws); }});
    t.emplace_back("loss.gp_rampup_iters",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.loss.gp_rampup_iters = to_long(k, v);
                         },
                         [](const ExperimentConfig& c) { return std::to_string(c.loss.gp_rampup_iters); }});
    t.emplace_back("augmentation.mode",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           if (v == "off") c.augmentation = AugMode::Off;
                           else if (v == "input") c.augmentation = AugMode::Input;
                           else if (v == "feature") c.augmentation = AugMode::Feature;
                           else bad(k, v, "one of off, input, feature");
                         },
                         [](const ExperimentConfig& c) { return aug_mode_name(c.augmentation); }});
    t.emplace_back("augmentation.site", count_field(&ExperimentConfig::augmentation_site));
    t.emplace_back("augmentation.max_level", count_field(&ExperimentConfig::max_level));
    t.emplace_back("augmentation.modulation", bool_field(&ExperimentConfig::modulation));
    t.emplace_back("regularizer.dropout_keep", real_field(&ExperimentConfig::dropout_keep));
    t.emplace_back("regularizer.dropout_site", count_field(&ExperimentConfig::dropout_site));
    t.emplace_back("regularizer.dropout_variant",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           if (v == "entrywise") c.dropout_variant = nn::DropoutVariant::Entrywise;
                           else if (v == "spatial") c.dropout_variant = nn::DropoutVariant::Spatial;
                           else bad(k, v, "one of entrywise, spatial");
                         },
                         [](const ExperimentConfig& c) {
                           return std::string(c.dropout_variant == nn::DropoutVariant::Spatial ? "spatial" : "entrywise");
                         }});
    t.emplace_back("optimizer.lr_d", real_field(&ExperimentConfig::lr_d));
    t.emplace_back("optimizer.lr_g", real_field(&ExperimentConfig::lr_g));
    t.emplace_back("optimizer.beta1", real_field(&ExperimentConfig::beta1));
    t.emplace_back("optimizer.beta2", real_field(&ExperimentConfig::beta2));
    t.emplace_back("optimizer.iter_d", count_field(&ExperimentConfig::iter_d));
    t.emplace_back("optimizer.batch_size", count_field(&ExperimentConfig::batch_size));
    t.emplace_back("scheduler.eval_interval", long_field(&ExperimentConfig::eval_interval));
    t.emplace_back("scheduler.threshold", real_field(&ExperimentConfig::threshold));
    t.emplace_back("scheduler.kid_samples", count_field(&ExperimentConfig::kid_samples));
    t.emplace_back("scheduler.warmup",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           try {
                             c.warmup = sched::parse_warmup(v);
                           } catch (const std::invalid_argument&) {
                             bad(k, v, "one of none, new_weight_optimizer, bit_prob_ramp");
                           }
                         },
                         [](const ExperimentConfig& c) { return sched::warmup_name(c.warmup); }});
    t.emplace_back("scheduler.warmup_iters", long_field(&ExperimentConfig::warmup_iters));
    t.emplace_back("scheduler.lr_adapt", bool_field(&ExperimentConfig::lr_adapt));
    t.emplace_back("scheduler.lr_decay", real_field(&ExperimentConfig::lr_decay));
    t.emplace_back("scheduler.lr_floor", real_field(&ExperimentConfig::lr_floor));
    t.emplace_back("train.iterations", long_field(&ExperimentConfig::iterations));
    t.emplace_back("train.seed",
                   Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.seed = static_cast<std::uint64_t>(to_count(k, v));
                         },
                         [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    t.emplace_back("train.reinit_baseline", bool_field(&ExperimentConfig::reinit_baseline));
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return &f;
  return nullptr;
}

nn::NetworkSpec parse_spec(const std::string& what, const std::string& layers) {
  nn::NetworkSpec spec;
  try {
    spec.layers = nn::parse_layers(layers);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ".layers: " + e.what());
  }
  return spec;
}

std::vector<std::size_t> affine_positions(const std::vector<nn::LayerSpec>& layers) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == nn::LayerKind::Dense || layers[i].kind == nn::LayerKind::Conv2d) pos.push_back(i);
  return pos;
}

}  // namespace

std::string aug_mode_name(AugMode mode) {
  switch (mode) {
    case AugMode::Off: return "off";
    case AugMode::Input: return "input";
    case AugMode::Feature: return "feature";
  }
  return "off";
}

nn::NetworkSpec ExperimentConfig::generator_spec() const {
  nn::NetworkSpec spec = parse_spec("generator", generator_layers);
  spec.input_shape = {latent_dim};
  spec.spectral_norm = generator_spectral_norm;
  return spec;
}

nn::NetworkSpec ExperimentConfig::discriminator_spec() const {
  nn::NetworkSpec spec = parse_spec("discriminator", discriminator_layers);
  if (!known_dataset(dataset)) throw ConfigError("unknown dataset '" + dataset + "'");
  spec.input_shape = sample_shape(dataset);
  spec.spectral_norm = discriminator_spectral_norm;
  spec.modulation = modulation;
  if (spec.augment_site()) throw ConfigError("discriminator.layers: place augmentation through augmentation.mode, not 'aug'");

  auto affine = affine_positions(spec.layers);
  std::optional<std::size_t> aug_at, drop_at;
  if (augmentation == AugMode::Input) aug_at = affine.empty() ? 0 : affine.front();
  if (augmentation == AugMode::Feature) {
    if (augmentation_site == 0 || augmentation_site >= affine.size()) {
      throw ConfigError("augmentation.site must name a hidden affine layer (1.." +
                        std::to_string(affine.empty() ? 0 : affine.size() - 1) + ")");
    }
    aug_at = affine[augmentation_site];
  }
  if (dropout_keep < 1.0) {
    if (dropout_site == 0 || dropout_site >= affine.size()) {
      throw ConfigError("regularizer.dropout_site must name a hidden affine layer");
    }
    drop_at = affine[dropout_site];
  }
  // Insert the later position first so the earlier one stays valid; dropout
  // sits before the augment marker when both target one layer.
  auto insert_aug = [&] {
    if (aug_at) spec.layers.insert(spec.layers.begin() + static_cast<std::ptrdiff_t>(*aug_at), nn::LayerSpec::augment_site());
  };
  auto insert_drop = [&] {
    if (drop_at) {
      spec.layers.insert(spec.layers.begin() + static_cast<std::ptrdiff_t>(*drop_at),
                         nn::LayerSpec::drop(dropout_keep, dropout_variant));
    }
  };
  if (drop_at && aug_at && *drop_at > *aug_at) {
    insert_drop();
    insert_aug();
  } else {
    insert_aug();
    insert_drop();
  }
  return spec;
}

void ExperimentConfig::validate() const {
  if (name.empty() || name.find_first_of("/\\ ") != std::string::npos) throw ConfigError("name must be a plain token");
  if (!known_dataset(dataset)) throw ConfigError("unknown dataset '" + dataset + "'");
  if (train_size < 2 || test_size < 2) throw ConfigError("dataset sizes must be >= 2");
  if (latent_dim == 0) throw ConfigError("generator.latent_dim must be positive");
  if (iterations < 0) throw ConfigError("train.iterations must be >= 0");
  if (batch_size == 0) throw ConfigError("optimizer.batch_size must be positive");
  if (iter_d < 1) throw ConfigError("optimizer.iter_d must be >= 1");
  if (!(lr_d > 0.0) || !(lr_g > 0.0)) throw ConfigError("learning rates must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("Adam betas must be in [0,1)");
  if (kid_samples < 2) throw ConfigError("scheduler.kid_samples must be >= 2");
  if (max_level > static_cast<std::size_t>(prob::kMaxLevel)) throw ConfigError("augmentation.max_level must be <= 20");
  if (!(dropout_keep > 0.0) || dropout_keep > 1.0) throw ConfigError("regularizer.dropout_keep must be in (0,1]");
  if (reinit_baseline && augmentation != AugMode::Off) throw ConfigError("train.reinit_baseline requires augmentation.mode = off");
  if (lr_adapt && (augmentation != AugMode::Off || reinit_baseline)) {
    throw ConfigError("scheduler.lr_adapt is a baseline and needs augmentation off");
  }
  try {
    loss.validate();
    sched::SchedulerState s;
    s.eval_interval = eval_interval;
    s.threshold = threshold;
    s.lr_decay = lr_decay;
    s.lr_floor = lr_floor;
    s.max_level = max_level;
    s.warmup.window = warmup_iters;
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    const auto g = generator_spec();
    const auto gs = g.infer_shapes();
    if (gs.back() != sample_shape(dataset)) {
      throw ConfigError("generator output " + nn::shape_string(gs.back()) + " does not match dataset sample shape " +
                        nn::shape_string(sample_shape(dataset)));
    }
    const auto d = discriminator_spec();
    const auto ds = d.infer_shapes();
    if (nn::numel(ds.back()) != 1) throw ConfigError("discriminator must end in a single score");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  f->set(cfg, key, value);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    apply_setting(cfg, key, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace pagan::harness
