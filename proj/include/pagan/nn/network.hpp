#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pagan/bitaug.hpp"
#include "pagan/nn/checkpoint.hpp"
#include "pagan/nn/layers.hpp"

namespace pagan::nn {

enum class LayerKind { Dense, Conv2d, Activation, GlobalSumPool, Dropout, AugmentSite, Scale, Reshape };
enum class ActivationKind { LeakyRelu, Relu, Tanh, Identity };

struct LayerSpec {
  LayerKind kind = LayerKind::Activation;
  std::size_t units = 0;  // dense width or conv output channels
  std::size_t kernel = 3;
  std::size_t stride = 1;
  Padding padding = Padding::Same;
  ActivationKind activation = ActivationKind::Identity;
  double slope = 0.2;
  double keep_rate = 1.0;
  DropoutVariant dropout = DropoutVariant::Entrywise;
  double factor = 1.0;
  Shape shape;  // per-sample target of Reshape

  static LayerSpec dense(std::size_t units);
  static LayerSpec conv(std::size_t channels, std::size_t kernel, std::size_t stride, Padding padding);
  static LayerSpec act(ActivationKind kind, double slope = 0.2);
  static LayerSpec sum_pool();
  static LayerSpec drop(double keep_rate, DropoutVariant variant);
  static LayerSpec augment_site();
  static LayerSpec scaled(double factor);
  static LayerSpec reshaped(Shape per_sample);
};

struct NetworkSpec {
  Shape input_shape;  // per sample
  std::vector<LayerSpec> layers;
  bool spectral_norm = false;
  int sn_train_iters = 1;
  bool modulation = true;  // lambda/beta on bit channels

  // Per-sample shape after every layer; throws std::invalid_argument on
  // incompatible shapes or a misplaced augment site.
  std::vector<Shape> infer_shapes() const;
  std::optional<std::size_t> augment_site() const;
};

// A feed-forward network built from a NetworkSpec. Every dense/conv layer is
// held as a bitaug::AugmentLayerState; only the one right after the augment
// site ever gets bit channels.
class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, Rng& rng);

  // input: [N, input_shape...]; bits: [N, level] (may be null at level 0).
  Var forward(const Var& input, const Tensor* bits, Mode mode, Rng& rng);

  const NetworkSpec& spec() const { return spec_; }
  const Shape& output_shape() const { return shapes_.back(); }

  std::vector<Var> parameters() const;
  NamedTensors named_parameters() const;
  void load_parameters(const NamedTensors& tensors);

  std::size_t augmentation_level() const;
  bool has_augment_site() const { return augment_layer_.has_value(); }
  void level_up(Rng& rng);
  std::vector<Var> newest_bit_parameters() const;
  // Fresh Xavier weights everywhere; augmentation level back to 0.
  void reinitialize(Rng& rng);

  bitaug::AugmentLayerState& affine_layer(std::size_t i) { return affine_.at(i); }
  std::size_t affine_count() const { return affine_.size(); }

 private:
  NetworkSpec spec_;
  std::vector<Shape> shapes_;
  std::vector<bitaug::AugmentLayerState> affine_;
  std::vector<std::size_t> affine_of_layer_;  // layer index -> affine index
  std::optional<std::size_t> augment_layer_;  // affine index
};

struct GraphEvaluation {
  Tensor output;
  // Accumulates parameter gradients for the given output gradient and returns
  // the gradient with respect to the input.
  std::function<Tensor(const Tensor& grad_output)> backprop;
};

GraphEvaluation evaluate_graph(Network& network, const Tensor& input, Mode mode, Rng& rng,
                               const Tensor* bits = nullptr);

// Parses "dense:64,lrelu,conv:16:4:2:same,pool,dropout:0.7:spatial,aug,
// tanh,scale:2.5,reshape:1:8:8".
std::vector<LayerSpec> parse_layers(const std::string& text);
std::string format_layers(const std::vector<LayerSpec>& layers);

}  // namespace pagan::nn
