#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pagan/nn/layers.hpp"
#include "pagan/random.hpp"

// Checksum labeling of (sample, bit sequence) pairs and the structural
// augmentation of a discriminator layer with bit channels.
namespace pagan::bitaug {

enum class ClassLabel : std::uint8_t { True = 0, Fake = 1 };

// Origin bit of a sample: data samples encode 0, synthetic samples 1.
inline constexpr int kDataOrigin = 0;
inline constexpr int kSyntheticOrigin = 1;

struct BitSequence {
  std::vector<std::uint8_t> bits;  // bits[0] is s_1

  std::size_t length() const { return bits.size(); }
  int parity() const;
  // Integer index with s_1 as the least significant bit.
  std::uint64_t index() const;
  static BitSequence from_index(std::uint64_t index, std::size_t length);

  friend bool operator==(const BitSequence&, const BitSequence&) = default;
};

// XOR of the origin bit with every entry of s; 0 -> TRUE, 1 -> FAKE.
ClassLabel checksum_label(int origin_bit, const BitSequence& s);

// Each bit is 1 independently with probability p_one, 0 <= p_one <= 0.5.
std::vector<BitSequence> sample_bits(std::size_t level, double p_one, std::size_t count, Rng& rng);

// Like sample_bits, but only the newest bit s_level uses p_newest; older bits
// stay uniform. Used by the bit-probability warm-up.
std::vector<BitSequence> sample_bits_ramped(std::size_t level, double p_newest, std::size_t count,
                                            Rng& rng);

// For every input sequence, a uniformly drawn sequence of the same length with
// the opposite parity. Length-0 sequences are returned unchanged.
std::vector<BitSequence> opposite_checksum_bits(const std::vector<BitSequence>& bits, Rng& rng);

// [count, level] matrix of 0/1 values.
nn::Tensor bits_matrix(const std::vector<BitSequence>& bits, std::size_t level);

// Rows 0..N-1 are real samples, rows N..2N-1 synthetic; row i and row N+i
// share bit sequence i.
struct AugmentedBatch {
  nn::Tensor samples;
  std::vector<std::uint8_t> origins;
  std::vector<BitSequence> bit_sequences;
  std::vector<ClassLabel> labels;

  std::size_t rows() const { return labels.size(); }
  std::vector<std::size_t> true_rows() const;
  std::vector<std::size_t> fake_rows() const;
  nn::Tensor bits() const;  // [2N, level]
};

// Labels and pairing only; samples stay empty. Callers that build the sample
// rows themselves (e.g. with a differentiable generator output) use this.
AugmentedBatch pair_layout(const std::vector<BitSequence>& bits);

// real and fake: [N, ...] with equal shapes; bits: N sequences of one length.
AugmentedBatch build_minibatch(const nn::Tensor& real, const nn::Tensor& fake,
                               const std::vector<BitSequence>& bits);

enum class AffineKind { Dense, Conv };

// The layer that consumes phi(x) together with the bit channels.
struct AugmentLayerState {
  AffineKind kind = AffineKind::Dense;
  std::size_t in_features = 0;  // dense: width of phi(x)
  nn::ConvGeometry geometry;    // conv: geometry of phi(x) alone
  std::size_t out_features = 0;

  nn::Var base_weights;  // dense [O, D]; conv [O, C*k*k]
  nn::Var bias;          // [O]; bit channels carry no bias of their own
  std::vector<nn::Var> bit_weights;  // dense [O, 1]; conv [O, k*k]
  std::vector<nn::Var> scales;       // lambda_l, each [1]
  std::vector<nn::Var> offsets;      // beta_l, each [1]

  bool modulation = true;
  bool spectral_norm = false;
  std::vector<double> sn_vector;

  std::size_t level() const { return bit_weights.size(); }
  std::size_t slice_size() const;

  std::vector<nn::Var> parameters() const;
  // Weight slice, scale and offset of the most recent bit.
  std::vector<nn::Var> newest_bit_parameters() const;
};

AugmentLayerState make_dense_augment_layer(std::size_t in_features, std::size_t out_features,
                                           bool spectral_norm, Rng& rng);
AugmentLayerState make_conv_augment_layer(const nn::ConvGeometry& geometry,
                                          std::size_t out_channels, bool spectral_norm, Rng& rng);

// Xavier-uniform base weights, zero bias, level reset to 0.
void reinitialize(AugmentLayerState& state, Rng& rng);

// Concatenates the modulated bit channels (lambda_l * s_l + beta_l, spatially
// replicated) to phi(x) along the channel axis and applies the layer.
// features: dense [N, D]; conv [N, C, H, W]. bits: [N, level].
nn::Var augment_features(const nn::Var& features, AugmentLayerState& state, const nn::Tensor& bits,
                         int sn_update_iters = 0);

// Adds one bit: a Gaussian weight slice with the mean/variance of the existing
// weights, lambda = mean of previous lambdas (1 for the first), beta = 0.
void level_up(AugmentLayerState& state, Rng& rng);

}  // namespace pagan::bitaug
