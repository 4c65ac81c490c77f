#include "pagan/bitaug.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pagan/nn/spectral_norm.hpp"

namespace pagan::bitaug {

namespace {

nn::IndexMap make_index(std::vector<std::ptrdiff_t> idx) {
  return std::make_shared<const std::vector<std::ptrdiff_t>>(std::move(idx));
}

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 0.5)) {
    throw std::invalid_argument("bit probability must lie in [0, 0.5], got " + std::to_string(p));
  }
}

std::size_t common_length(const std::vector<BitSequence>& bits) {
  if (bits.empty()) return 0;
  const std::size_t len = bits.front().length();
  for (const auto& s : bits) {
    if (s.length() != len) throw std::invalid_argument("bit sequences must share one length");
  }
  return len;
}

nn::Var concat_scalars(const std::vector<nn::Var>& values) {
  return nn::reshape(nn::concat_rows(values), {1, values.size()});
}

}  // namespace

int BitSequence::parity() const {
  int p = 0;
  for (auto b : bits) p ^= (b & 1);
  return p;
}

std::uint64_t BitSequence::index() const {
  if (bits.size() > 63) throw std::out_of_range("bit sequence too long for an index");
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) idx |= static_cast<std::uint64_t>(bits[i] & 1) << i;
  return idx;
}

BitSequence BitSequence::from_index(std::uint64_t index, std::size_t length) {
  BitSequence s;
  s.bits.resize(length);
  for (std::size_t i = 0; i < length; ++i) s.bits[i] = static_cast<std::uint8_t>((index >> i) & 1u);
  return s;
}

ClassLabel checksum_label(int origin_bit, const BitSequence& s) {
  if (origin_bit != 0 && origin_bit != 1) throw std::invalid_argument("origin bit must be 0 or 1");
  return (origin_bit ^ s.parity()) == 0 ? ClassLabel::True : ClassLabel::Fake;
}

std::vector<BitSequence> sample_bits(std::size_t level, double p_one, std::size_t count, Rng& rng) {
  check_probability(p_one);
  std::vector<BitSequence> out(count);
  for (auto& s : out) {
    s.bits.resize(level);
    for (auto& b : s.bits) b = uniform01(rng) < p_one ? 1 : 0;
  }
  return out;
}

std::vector<BitSequence> sample_bits_ramped(std::size_t level, double p_newest, std::size_t count,
                                            Rng& rng) {
  check_probability(p_newest);
  std::vector<BitSequence> out(count);
  for (auto& s : out) {
    s.bits.resize(level);
    for (std::size_t i = 0; i < level; ++i) {
      const double p = (i + 1 == level) ? p_newest : 0.5;
      s.bits[i] = uniform01(rng) < p ? 1 : 0;
    }
  }
  return out;
}

std::vector<BitSequence> opposite_checksum_bits(const std::vector<BitSequence>& bits, Rng& rng) {
  std::vector<BitSequence> out;
  out.reserve(bits.size());
  for (const auto& s : bits) {
    if (s.length() == 0) {
      out.push_back(s);
      continue;
    }
    auto fresh = sample_bits(s.length(), 0.5, 1, rng).front();
    if (fresh.parity() == s.parity()) fresh.bits.back() ^= 1;
    out.push_back(std::move(fresh));
  }
  return out;
}

nn::Tensor bits_matrix(const std::vector<BitSequence>& bits, std::size_t level) {
  nn::Tensor m({bits.size(), level}, 0.0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i].length() != level) throw std::invalid_argument("bit sequence length mismatch");
    for (std::size_t j = 0; j < level; ++j) m[i * level + j] = bits[i].bits[j];
  }
  return m;
}

std::vector<std::size_t> AugmentedBatch::true_rows() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == ClassLabel::True) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> AugmentedBatch::fake_rows() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == ClassLabel::Fake) rows.push_back(i);
  return rows;
}

nn::Tensor AugmentedBatch::bits() const {
  return bits_matrix(bit_sequences, bit_sequences.empty() ? 0 : bit_sequences.front().length());
}

AugmentedBatch pair_layout(const std::vector<BitSequence>& bits) {
  common_length(bits);
  AugmentedBatch batch;
  const std::size_t n = bits.size();
  batch.origins.resize(2 * n);
  batch.bit_sequences.resize(2 * n);
  batch.labels.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.origins[i] = kDataOrigin;
    batch.origins[n + i] = kSyntheticOrigin;
    batch.bit_sequences[i] = bits[i];
    batch.bit_sequences[n + i] = bits[i];
    batch.labels[i] = checksum_label(kDataOrigin, bits[i]);
    batch.labels[n + i] = checksum_label(kSyntheticOrigin, bits[i]);
  }
  return batch;
}

AugmentedBatch build_minibatch(const nn::Tensor& real, const nn::Tensor& fake,
                               const std::vector<BitSequence>& bits) {
  if (real.shape() != fake.shape()) throw std::invalid_argument("real and fake batches differ in shape");
  if (real.rank() == 0 || real.dim(0) != bits.size()) {
    throw std::invalid_argument("need one bit sequence per real/fake pair");
  }
  AugmentedBatch batch = pair_layout(bits);
  nn::Shape shape = real.shape();
  shape[0] *= 2;
  std::vector<double> values(real.values().begin(), real.values().end());
  values.insert(values.end(), fake.values().begin(), fake.values().end());
  batch.samples = nn::Tensor(std::move(shape), std::move(values));
  return batch;
}

std::size_t AugmentLayerState::slice_size() const {
  return kind == AffineKind::Dense ? 1 : geometry.kernel * geometry.kernel;
}

std::vector<nn::Var> AugmentLayerState::parameters() const {
  std::vector<nn::Var> params{base_weights, bias};
  params.insert(params.end(), bit_weights.begin(), bit_weights.end());
  if (modulation) {
    params.insert(params.end(), scales.begin(), scales.end());
    params.insert(params.end(), offsets.begin(), offsets.end());
  }
  return params;
}

std::vector<nn::Var> AugmentLayerState::newest_bit_parameters() const {
  if (level() == 0) return {};
  std::vector<nn::Var> params{bit_weights.back()};
  if (modulation) {
    params.push_back(scales.back());
    params.push_back(offsets.back());
  }
  return params;
}

AugmentLayerState make_dense_augment_layer(std::size_t in_features, std::size_t out_features,
                                           bool spectral_norm, Rng& rng) {
  AugmentLayerState state;
  state.kind = AffineKind::Dense;
  state.in_features = in_features;
  state.out_features = out_features;
  state.spectral_norm = spectral_norm;
  reinitialize(state, rng);
  return state;
}

AugmentLayerState make_conv_augment_layer(const nn::ConvGeometry& geometry,
                                          std::size_t out_channels, bool spectral_norm, Rng& rng) {
  AugmentLayerState state;
  state.kind = AffineKind::Conv;
  state.geometry = geometry;
  state.out_features = out_channels;
  state.spectral_norm = spectral_norm;
  reinitialize(state, rng);
  return state;
}

void reinitialize(AugmentLayerState& state, Rng& rng) {
  std::size_t fan_in = 0, fan_out = 0, cols = 0;
  if (state.kind == AffineKind::Dense) {
    cols = fan_in = state.in_features;
    fan_out = state.out_features;
  } else {
    const std::size_t kk = state.geometry.kernel * state.geometry.kernel;
    cols = fan_in = state.geometry.patch_size();
    fan_out = state.out_features * kk;
  }
  state.base_weights = nn::parameter(nn::xavier_uniform(state.out_features, cols, fan_in, fan_out, rng));
  state.bias = nn::parameter(nn::Tensor({state.out_features}, 0.0));
  state.bit_weights.clear();
  state.scales.clear();
  state.offsets.clear();
  state.sn_vector = nn::init_power_vector(state.out_features, rng);
}

nn::Var augment_features(const nn::Var& features, AugmentLayerState& state, const nn::Tensor& bits,
                         int sn_update_iters) {
  const std::size_t level = state.level();
  const std::size_t batch = features.shape().at(0);
  if (bits.rank() != 2 || bits.dim(0) != batch || bits.dim(1) != level) {
    throw std::invalid_argument("augment_features: bits " + nn::shape_string(bits.shape()) +
                                " do not match batch " + std::to_string(batch) + " at level " +
                                std::to_string(level));
  }

  nn::Var input = features;
  nn::Var weight = state.base_weights;
  if (level > 0) {
    // [N, l] modulated bit values
    nn::Var modulated = nn::mul(nn::constant(bits), nn::broadcast_rows(concat_scalars(state.scales), batch));
    modulated = nn::add(modulated, nn::broadcast_rows(concat_scalars(state.offsets), batch));

    std::vector<nn::Var> weight_parts{state.base_weights};
    weight_parts.insert(weight_parts.end(), state.bit_weights.begin(), state.bit_weights.end());
    weight = nn::concat_columns(weight_parts);

    if (state.kind == AffineKind::Dense) {
      input = nn::concat_columns({features, modulated});
    } else {
      const auto& g = state.geometry;
      const std::size_t spatial = g.in_h * g.in_w;
      std::vector<std::ptrdiff_t> idx(batch * level * spatial);
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t j = 0; j < level; ++j)
          for (std::size_t p = 0; p < spatial; ++p)
            idx[(n * level + j) * spatial + p] = static_cast<std::ptrdiff_t>(n * level + j);
      nn::Var channels = nn::gather(modulated, make_index(std::move(idx)), {batch, level, g.in_h, g.in_w});
      input = nn::reshape(nn::concat_columns({features, channels}),
                          {batch, g.in_channels + level, g.in_h, g.in_w});
    }
  }
  if (state.spectral_norm) weight = nn::spectral_normalized(weight, state.sn_vector, sn_update_iters);

  if (state.kind == AffineKind::Dense) {
    if (features.shape().size() != 2 || features.shape()[1] != state.in_features) {
      throw std::invalid_argument("augment_features: dense input " + nn::shape_string(features.shape()) +
                                  " does not match layer width " + std::to_string(state.in_features));
    }
    return nn::dense(input, weight, state.bias);
  }
  return nn::conv2d(input, weight, state.bias, state.geometry.with_channels(state.geometry.in_channels + level));
}

void level_up(AugmentLayerState& state, Rng& rng) {
  std::vector<double> pool(state.base_weights.value().values().begin(),
                           state.base_weights.value().values().end());
  for (const auto& w : state.bit_weights)
    pool.insert(pool.end(), w.value().values().begin(), w.value().values().end());
  const double n = static_cast<double>(pool.size());
  const double mu = std::accumulate(pool.begin(), pool.end(), 0.0) / n;
  double var = 0.0;
  for (double v : pool) var += (v - mu) * (v - mu);
  const double sd = std::sqrt(var / n);

  std::normal_distribution<double> dist(mu, sd > 0.0 ? sd : 0.0);
  nn::Tensor slice({state.out_features, state.slice_size()});
  for (double& v : slice.values()) v = sd > 0.0 ? dist(rng) : mu;

  double lambda = 1.0;
  if (!state.scales.empty()) {
    lambda = 0.0;
    for (const auto& s : state.scales) lambda += s.value()[0];
    lambda /= static_cast<double>(state.scales.size());
  }
  state.bit_weights.push_back(nn::parameter(std::move(slice)));
  state.scales.push_back(nn::parameter(nn::Tensor::scalar(lambda)));
  state.offsets.push_back(nn::parameter(nn::Tensor::scalar(0.0)));
}

}  // namespace pagan::bitaug
