#pragma once

#include <cstddef>

#include "pagan/nn/ops.hpp"
#include "pagan/random.hpp"

namespace pagan::nn {

enum class Mode { Train, Eval };
enum class Padding { Same, Valid };
enum class DropoutVariant { Entrywise, Spatial };

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  Padding padding = Padding::Same;
  std::size_t out_h = 0;
  std::size_t out_w = 0;
  std::size_t pad_top = 0;
  std::size_t pad_left = 0;

  // Supported: stride 1 or 2, kernel 1..4.
  static ConvGeometry make(std::size_t channels, std::size_t h, std::size_t w, std::size_t kernel,
                           std::size_t stride, Padding padding);

  std::size_t patch_size() const { return in_channels * kernel * kernel; }
  ConvGeometry with_channels(std::size_t channels) const;
};

// Row (n, oh, ow) and column (c, ki, kj) layout of the patch matrix.
IndexMap im2col_index(const ConvGeometry& geometry, std::size_t batch);

// Glorot/Xavier uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng);

// x: [N, D], weight: [O, D], bias: [O] -> [N, O]
Var dense(const Var& x, const Var& weight, const Var& bias);

// x: [N, C, H, W], weight: [O, C*k*k], bias: [O] -> [N, O, Ho, Wo]
Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& geometry);

// [N, C, H, W] -> [N, C]
Var global_sum_pool(const Var& x);

// Inverted dropout. The spatial variant draws one keep bit per (sample,
// channel) of a rank-4 input; rank-2 inputs treat every feature as a channel.
Tensor dropout_mask(const Shape& shape, double keep_rate, DropoutVariant variant, Rng& rng);
Var apply_dropout(const Var& x, double keep_rate, DropoutVariant variant, Mode mode, Rng& rng);

}  // namespace pagan::nn
