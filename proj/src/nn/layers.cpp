#include "pagan/nn/layers.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace pagan::nn {

namespace {

IndexMap make_index(std::vector<std::ptrdiff_t> idx) {
  return std::make_shared<const std::vector<std::ptrdiff_t>>(std::move(idx));
}

std::size_t same_pad_total(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>((out - 1) * stride + kernel) -
                               static_cast<std::ptrdiff_t>(in);
  return total > 0 ? static_cast<std::size_t>(total) : 0;
}

}  // namespace

ConvGeometry ConvGeometry::make(std::size_t channels, std::size_t h, std::size_t w,
                                std::size_t kernel, std::size_t stride, Padding padding) {
  if (kernel < 1 || kernel > 4) throw std::invalid_argument("conv kernel must be in 1..4");
  if (stride != 1 && stride != 2) throw std::invalid_argument("conv stride must be 1 or 2");
  if (channels == 0 || h == 0 || w == 0) throw std::invalid_argument("conv input must be non-empty");
  ConvGeometry g;
  g.in_channels = channels;
  g.in_h = h;
  g.in_w = w;
  g.kernel = kernel;
  g.stride = stride;
  g.padding = padding;
  if (padding == Padding::Same) {
    g.out_h = (h + stride - 1) / stride;
    g.out_w = (w + stride - 1) / stride;
    g.pad_top = same_pad_total(h, g.out_h, kernel, stride) / 2;
    g.pad_left = same_pad_total(w, g.out_w, kernel, stride) / 2;
  } else {
    if (h < kernel || w < kernel) throw std::invalid_argument("valid conv: input smaller than kernel");
    g.out_h = (h - kernel) / stride + 1;
    g.out_w = (w - kernel) / stride + 1;
  }
  return g;
}

ConvGeometry ConvGeometry::with_channels(std::size_t channels) const {
  return make(channels, in_h, in_w, kernel, stride, padding);
}

IndexMap im2col_index(const ConvGeometry& g, std::size_t batch) {
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,
                         std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>;
  thread_local std::map<Key, IndexMap> cache;
  const Key key{g.in_channels, g.in_h, g.in_w, g.kernel, g.stride, g.pad_top, g.pad_left, g.out_h, g.out_w, batch};
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const std::size_t k = g.kernel;
  const std::size_t cols = g.patch_size();
  const std::size_t positions = g.out_h * g.out_w;
  std::vector<std::ptrdiff_t> idx(batch * positions * cols, -1);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oh = 0; oh < g.out_h; ++oh) {
      for (std::size_t ow = 0; ow < g.out_w; ++ow) {
        const std::size_t row = (n * g.out_h + oh) * g.out_w + ow;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          for (std::size_t ki = 0; ki < k; ++ki) {
            for (std::size_t kj = 0; kj < k; ++kj) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) -
                                        static_cast<std::ptrdiff_t>(g.pad_top);
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + kj) -
                                        static_cast<std::ptrdiff_t>(g.pad_left);
              if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(g.in_h) ||
                  iw >= static_cast<std::ptrdiff_t>(g.in_w)) {
                continue;
              }
              const std::size_t col = (c * k + ki) * k + kj;
              idx[row * cols + col] = static_cast<std::ptrdiff_t>(
                  ((n * g.in_channels + c) * g.in_h + static_cast<std::size_t>(ih)) * g.in_w +
                  static_cast<std::size_t>(iw));
            }
          }
        }
      }
    }
  }
  auto map = make_index(std::move(idx));
  cache.emplace(key, map);
  return map;
}

Tensor xavier_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor w({rows, cols});
  for (double& v : w.values()) v = dist(rng);
  return w;
}

Var dense(const Var& x, const Var& weight, const Var& bias) {
  Var y = matmul(x, transpose(weight));
  return bias ? add_row_bias(y, bias) : y;
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& g) {
  if (x.shape().size() != 4 || x.shape()[1] != g.in_channels || x.shape()[2] != g.in_h ||
      x.shape()[3] != g.in_w) {
    throw std::invalid_argument("conv2d: input " + shape_string(x.shape()) +
                                " does not match geometry");
  }
  if (weight.shape().size() != 2 || weight.shape()[1] != g.patch_size()) {
    throw std::invalid_argument("conv2d: weight " + shape_string(weight.shape()) +
                                " does not match patch size");
  }
  const std::size_t batch = x.shape()[0];
  const std::size_t out_c = weight.shape()[0];
  const std::size_t positions = g.out_h * g.out_w;
  Var cols = gather(x, im2col_index(g, batch), {batch * positions, g.patch_size()});
  Var y = dense(cols, weight, bias);  // [N*P, O]
  std::vector<std::ptrdiff_t> perm(batch * out_c * positions);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < out_c; ++o)
      for (std::size_t p = 0; p < positions; ++p)
        perm[(n * out_c + o) * positions + p] =
            static_cast<std::ptrdiff_t>((n * positions + p) * out_c + o);
  return gather(y, make_index(std::move(perm)), {batch, out_c, g.out_h, g.out_w});
}

Var global_sum_pool(const Var& x) {
  if (x.shape().size() != 4) throw std::invalid_argument("global_sum_pool expects [N,C,H,W]");
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  const std::size_t spatial = x.shape()[2] * x.shape()[3];
  std::vector<std::ptrdiff_t> idx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) idx[i] = static_cast<std::ptrdiff_t>(i / spatial);
  return scatter_add(x, make_index(std::move(idx)), {n, c});
}

Tensor dropout_mask(const Shape& shape, double keep_rate, DropoutVariant variant, Rng& rng) {
  if (!(keep_rate > 0.0) || keep_rate > 1.0) throw std::invalid_argument("keep_rate must be in (0,1]");
  Tensor mask(shape, 0.0);
  const double kept = 1.0 / keep_rate;
  std::size_t group = 1;
  if (variant == DropoutVariant::Spatial && shape.size() == 4) group = shape[2] * shape[3];
  for (std::size_t start = 0; start < mask.size(); start += group) {
    const double value = uniform01(rng) < keep_rate ? kept : 0.0;
    for (std::size_t i = start; i < start + group; ++i) mask[i] = value;
  }
  return mask;
}

Var apply_dropout(const Var& x, double keep_rate, DropoutVariant variant, Mode mode, Rng& rng) {
  if (!(keep_rate > 0.0) || keep_rate > 1.0) throw std::invalid_argument("keep_rate must be in (0,1]");
  if (mode == Mode::Eval || keep_rate == 1.0) return x;
  return mul_constant(x, dropout_mask(x.shape(), keep_rate, variant, rng));
}

}  // namespace pagan::nn
